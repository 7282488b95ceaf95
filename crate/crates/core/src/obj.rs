//! Wavefront OBJ export of the pullback positions.

use std::io::{self, Write};

use crate::integrator::IsoMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjStats {
    pub vertices: usize,
    pub faces: usize,
}

/// Writes `v` records for valid nodes (row-major, numbered from 1) and one
/// quad per cell whose four corners are valid.
pub fn write_obj<W: Write>(mesh: &IsoMesh, out: &mut W) -> io::Result<ObjStats> {
    let mut index = vec![vec![0usize; mesh.grid.first().map_or(0, Vec::len)]; mesh.grid.len()];
    let mut next = 1;
    for (i, row) in mesh.grid.iter().enumerate() {
        for (j, n) in row.iter().enumerate() {
            if n.valid {
                let [x, y, z] = n.f_pullback;
                writeln!(out, "v {x} {y} {z}")?;
                index[i][j] = next;
                next += 1;
            }
        }
    }
    let mut faces = 0;
    for i in 0..index.len().saturating_sub(1) {
        for j in 0..index[i].len().saturating_sub(1) {
            let q = [index[i][j], index[i][j + 1], index[i + 1][j + 1], index[i + 1][j]];
            if q.iter().all(|&v| v > 0) {
                writeln!(out, "f {} {} {} {}", q[0], q[1], q[2], q[3])?;
                faces += 1;
            }
        }
    }
    Ok(ObjStats {
        vertices: next - 1,
        faces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{build_mesh, MeshParams};
    use crate::surface::parse_surface;

    #[test]
    fn records_reference_existing_vertices() {
        let s = parse_surface("builtin:graph").unwrap();
        let mut p = MeshParams::new((0.9, 0.5), 1.0, 0.05, 6);
        p.h_beta = 0.02;
        let mesh = build_mesh(&s, &p).unwrap();
        let mut buf = Vec::new();
        let stats = write_obj(&mesh, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(stats.vertices, mesh.valid_count());
        assert!(stats.faces > 0 && stats.faces < 25, "truncated rows drop faces");
        let mut v = 0;
        for line in text.lines() {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    v += 1;
                    assert_eq!(parts.filter_map(|t| t.parse::<f64>().ok()).count(), 3);
                }
                Some("f") => {
                    let ids: Vec<usize> = parts.map(|t| t.parse().unwrap()).collect();
                    assert_eq!(ids.len(), 4);
                    assert!(ids.iter().all(|&k| k >= 1 && k <= v));
                }
                other => panic!("unexpected record {other:?}"),
            }
        }
    }
}
