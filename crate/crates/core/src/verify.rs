//! Checks of a finished mesh against the definition of isothermic coordinates.
//!
//! Tangent and second derivatives come from fourth-order central differences
//! of the stored positions over the `(β, γ)` grid; only the unit normal is
//! taken from the surface. Nothing here reuses the generator's formulas.

use nalgebra::{Matrix2, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::EPS_ABS;
use crate::integrator::IsoMesh;
use crate::isothermic::FrameAngle;
use crate::surface::{SurfaceDef, Vec3};

/// Conformality required before the Hopf coefficient is meaningful.
pub const HOPF_CONFORMALITY_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub conformality_max: f64,
    pub orthogonality_max: f64,
    pub curvature_line_max: f64,
    pub hopf_imag_max: f64,
    pub integral_drift_max: f64,
    /// Filled in by callers that ran the two-path comparison.
    pub path_independence: Option<f64>,
    pub interior_nodes: usize,
    pub valid_nodes: usize,
    pub n_beta: usize,
    pub n_gamma: usize,
    pub h_beta: f64,
    pub h_gamma: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct NodeResiduals {
    conformality: f64,
    orthogonality: f64,
    curvature_line: f64,
    hopf: f64,
}

impl NodeResiduals {
    fn max(self, o: Self) -> Self {
        Self {
            conformality: self.conformality.max(o.conformality),
            orthogonality: self.orthogonality.max(o.orthogonality),
            curvature_line: self.curvature_line.max(o.curvature_line),
            hopf: self.hopf.max(o.hopf),
        }
    }
}

const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

fn interior(mesh: &IsoMesh, i: usize, j: usize) -> bool {
    let (nb, ng) = (mesh.grid.len(), mesh.grid[0].len());
    if i < 2 || j < 2 || i + 2 >= nb || j + 2 >= ng {
        return false;
    }
    (i - 2..=i + 2).all(|a| (j - 2..=j + 2).all(|b| mesh.grid[a][b].valid))
}

fn node_residuals(mesh: &IsoMesh, surface: &SurfaceDef, i: usize, j: usize) -> Result<NodeResiduals> {
    let (hb, hg) = (mesh.params.h_beta, mesh.params.h_gamma);
    let f = |a: usize, b: usize| mesh.grid[a][b].pullback();
    let mut f_b = Vec3::zeros();
    let mut f_g = Vec3::zeros();
    let mut f_bb = Vec3::zeros();
    let mut f_gg = Vec3::zeros();
    let mut f_bg = Vec3::zeros();
    for s in 0..5 {
        f_b += f(i + s - 2, j) * D1[s];
        f_g += f(i, j + s - 2) * D1[s];
        f_bb += f(i + s - 2, j) * D2[s];
        f_gg += f(i, j + s - 2) * D2[s];
        for t in 0..5 {
            f_bg += f(i + s - 2, j + t - 2) * (D1[s] * D1[t]);
        }
    }
    f_b /= 12.0 * hb;
    f_g /= 12.0 * hg;
    f_bb /= 12.0 * hb * hb;
    f_gg /= 12.0 * hg * hg;
    f_bg /= 144.0 * hb * hg;

    let node = mesh.grid[i][j];
    let jet = surface.jet(node.x, node.y)?;
    let normal = jet.fx.cross(&jet.fy).normalize();
    let k = node.k;
    let (nb, ng) = (f_b.norm(), f_g.norm());
    let l = f_gg.dot(&normal);
    let m = f_bg.dot(&normal);
    let n = f_bb.dot(&normal);
    let q_abs = (0.25 * (l - n)).hypot(0.5 * m);
    Ok(NodeResiduals {
        conformality: (nb - ng).abs().max((nb - k).abs()).max((ng - k).abs()) / k,
        orthogonality: f_b.dot(&f_g).abs() / (k * k),
        curvature_line: m.abs() / (l.abs() + n.abs() + EPS_ABS),
        hopf: (0.5 * m).abs() / (q_abs + EPS_ABS),
    })
}

fn residual_max(mesh: &IsoMesh, surface: &SurfaceDef) -> Result<(NodeResiduals, usize)> {
    let nb = mesh.grid.len();
    let ng = mesh.grid.first().map_or(0, Vec::len);
    let cells: Vec<(usize, usize)> = (0..nb)
        .flat_map(|i| (0..ng).map(move |j| (i, j)))
        .filter(|&(i, j)| interior(mesh, i, j))
        .collect();
    if cells.is_empty() {
        return Err(Error::MeshTooSmall);
    }
    let per_node: Vec<NodeResiduals> = cells
        .par_iter()
        .map(|&(i, j)| node_residuals(mesh, surface, i, j))
        .collect::<Result<_>>()?;
    let max = per_node.into_iter().fold(NodeResiduals::default(), NodeResiduals::max);
    Ok((max, cells.len()))
}

/// Residuals of `‖f_β‖ = ‖f_γ‖ = K`, `⟨f_β, f_γ⟩ = 0` and `⟨f_βγ, N⟩ = 0` over
/// interior nodes (those with a full 5×5 block of valid neighbours).
pub fn mesh_diagnostics(mesh: &IsoMesh, surface: &SurfaceDef) -> Result<DiagnosticsReport> {
    let (r, count) = residual_max(mesh, surface)?;
    Ok(DiagnosticsReport {
        conformality_max: r.conformality,
        orthogonality_max: r.orthogonality,
        curvature_line_max: r.curvature_line,
        hopf_imag_max: r.hopf,
        integral_drift_max: mesh.max_integral_drift(),
        path_independence: None,
        interior_nodes: count,
        valid_nodes: mesh.valid_count(),
        n_beta: mesh.grid.len(),
        n_gamma: mesh.grid.first().map_or(0, Vec::len),
        h_beta: mesh.params.h_beta,
        h_gamma: mesh.params.h_gamma,
    })
}

/// Largest `|Im Q| / |Q|` of the Hopf coefficient `Q = (l′ − n′)/4 − i m′/2`.
pub fn hopf_realness(mesh: &IsoMesh, surface: &SurfaceDef) -> Result<f64> {
    hopf_realness_with_limit(mesh, surface, HOPF_CONFORMALITY_LIMIT)
}

/// [`hopf_realness`] with a custom conformality precondition.
pub fn hopf_realness_with_limit(mesh: &IsoMesh, surface: &SurfaceDef, limit: f64) -> Result<f64> {
    let (r, _) = residual_max(mesh, surface)?;
    if r.conformality > limit {
        return Err(Error::NotConformalEnough {
            conformality: r.conformality,
            limit,
        });
    }
    Ok(r.hopf)
}

/// Angle between the frame's `f_γ` direction and the nearest principal
/// direction, from a direct eigen-decomposition of the second form.
pub fn principal_direction_oracle(surface: &SurfaceDef, p: (f64, f64), a: &FrameAngle) -> Result<f64> {
    let j = surface.jet(p.0, p.1)?;
    let normal = j.fx.cross(&j.fy).normalize();
    let t1 = j.fx.normalize();
    let t2 = normal.cross(&t1);

    // chart coordinates of t1, t2 through the inverse Gram matrix
    let gram = Matrix2::new(
        j.fx.dot(&j.fx),
        j.fx.dot(&j.fy),
        j.fy.dot(&j.fx),
        j.fy.dot(&j.fy),
    );
    let inv = gram
        .try_inverse()
        .ok_or(Error::DegenerateMetric(gram.determinant()))?;
    let coords = |t: Vec3| inv * nalgebra::Vector2::new(t.dot(&j.fx), t.dot(&j.fy));
    let second = Matrix2::new(
        j.fxx.dot(&normal),
        j.fxy.dot(&normal),
        j.fxy.dot(&normal),
        j.fyy.dot(&normal),
    );
    let (c1, c2) = (coords(t1), coords(t2));
    let ii = |u: &nalgebra::Vector2<f64>, v: &nalgebra::Vector2<f64>| (second * v).dot(u);
    let shape = Matrix2::new(ii(&c1, &c1), ii(&c1, &c2), ii(&c2, &c1), ii(&c2, &c2));

    let eig = SymmetricEigen::new(shape);
    let (k1, k2) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    if (k1 - k2).abs() <= 1e-8 * (k1.abs() + k2.abs()) + EPS_ABS {
        return Err(Error::UmbilicPoint { x: p.0, y: p.1 });
    }
    let v = eig.eigenvectors.column(0);
    let principal = t1 * v[0] + t2 * v[1];

    // f_γ direction from α in an independently built Gram-Schmidt frame
    let d2 = (j.fy - t1 * j.fy.dot(&t1)).normalize();
    let (s, c) = a.alpha.sin_cos();
    let dir = t1 * c + d2 * s;
    let dot = dir.dot(&principal).abs();
    let cross = dir.cross(&principal).norm();
    // nearest of the two orthogonal principal lines
    Ok(cross.atan2(dot).min(dot.atan2(cross)))
}
