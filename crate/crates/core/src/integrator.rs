//! Fixed-step RK4 march of `(x, y, K, f)` over the `(β, γ)` grid.

use crate::error::{Error, Result};
use crate::forms::{fundamental, DEFAULT_UMBILIC_TOL};
use crate::isothermic::{alpha, alpha_gradient, chart_rhs, frames, k_rhs, FrameAngle};
use crate::surface::{SurfaceDef, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Beta,
    Gamma,
}

/// Evaluation settings shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchOptions {
    pub umbilic_tol: f64,
    /// Step for the α gradient; `None` uses the point-scaled default.
    pub fd_step: Option<f64>,
}

impl Default for MarchOptions {
    fn default() -> Self {
        Self {
            umbilic_tol: DEFAULT_UMBILIC_TOL,
            fd_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchState {
    pub x: f64,
    pub y: f64,
    pub k: f64,
    pub alpha_hint: FrameAngle,
    /// Position accumulated by integrating the frame.
    pub f_int: Vec3,
}

impl MarchState {
    pub fn seed(surface: &SurfaceDef, x: f64, y: f64, k: f64, branch: u8, opts: &MarchOptions) -> Result<Self> {
        if !surface.domain.contains(x, y) {
            return Err(Error::SeedOutOfDomain { x, y });
        }
        let j = surface.jet(x, y).map_err(|e| match e {
            Error::OutOfDomain { .. } => Error::SeedOutOfDomain { x, y },
            other => other,
        })?;
        let fd = fundamental(&j)?;
        let a = alpha(&fd, (x, y), branch, None, opts.umbilic_tol).map_err(|e| match e {
            Error::UmbilicPoint { x, y } => Error::SeedUmbilic { x, y },
            other => other,
        })?;
        Ok(Self {
            x,
            y,
            k,
            alpha_hint: a,
            f_int: j.f,
        })
    }

    fn distance(&self, o: &Self) -> f64 {
        (self.x - o.x)
            .abs()
            .max((self.y - o.y).abs())
            .max((self.k - o.k).abs() / self.k.abs().max(o.k.abs()))
            .max((self.f_int - o.f_int).norm())
    }
}

// d(x, y, K, f)/dt along `dir`, plus the angle used
fn derivative(
    surface: &SurfaceDef,
    x: f64,
    y: f64,
    k: f64,
    hint: &FrameAngle,
    dir: Direction,
    opts: &MarchOptions,
) -> Result<([f64; 3], Vec3, FrameAngle)> {
    let j = surface.jet(x, y)?;
    let fd = fundamental(&j)?;
    let a = alpha(&fd, (x, y), hint.branch, Some(hint), opts.umbilic_tol)?;
    let g = alpha_gradient(surface, (x, y), a.branch, opts.fd_step, opts.umbilic_tol)?;
    let jac = chart_rhs(&fd, &a, k);
    let (k_g, k_b) = k_rhs(&fd, &a, &g, k);
    let fr = frames(&j, &fd, &a, k);
    Ok(match dir {
        Direction::Gamma => ([jac.x_gamma, jac.y_gamma, k_g], fr.f_gamma, a),
        Direction::Beta => ([jac.x_beta, jac.y_beta, k_b], fr.f_beta, a),
    })
}

/// One classical RK4 step. Stage points that are umbilic or outside the
/// domain fail the step; the caller marks the node invalid.
pub fn rk4_step(
    surface: &SurfaceDef,
    s: &MarchState,
    dir: Direction,
    h: f64,
    opts: &MarchOptions,
) -> Result<MarchState> {
    if h == 0.0 {
        return Ok(*s);
    }
    let (d1, f1, a1) = derivative(surface, s.x, s.y, s.k, &s.alpha_hint, dir, opts)?;
    let at = |d: &[f64; 3], t: f64| (s.x + t * d[0], s.y + t * d[1], s.k + t * d[2]);
    let (x2, y2, k2) = at(&d1, h / 2.0);
    let (d2, f2, a2) = derivative(surface, x2, y2, k2, &a1, dir, opts)?;
    let (x3, y3, k3) = at(&d2, h / 2.0);
    let (d3, f3, a3) = derivative(surface, x3, y3, k3, &a2, dir, opts)?;
    let (x4, y4, k4) = at(&d3, h);
    let (d4, f4, a4) = derivative(surface, x4, y4, k4, &a3, dir, opts)?;
    let comb = |i: usize| h / 6.0 * (d1[i] + 2.0 * d2[i] + 2.0 * d3[i] + d4[i]);
    let next = MarchState {
        x: s.x + comb(0),
        y: s.y + comb(1),
        k: s.k + comb(2),
        alpha_hint: a4,
        f_int: s.f_int + (f1 + f2 * 2.0 + f3 * 2.0 + f4) * (h / 6.0),
    };
    if !(next.k > 0.0) {
        return Err(Error::Config(format!("scaling K left (0, ∞): {}", next.k)));
    }
    if !surface.domain.contains(next.x, next.y) {
        return Err(Error::OutOfDomain { x: next.x, y: next.y });
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeshNode {
    pub x: f64,
    pub y: f64,
    pub k: f64,
    pub f_pullback: [f64; 3],
    pub f_int: [f64; 3],
    pub valid: bool,
}

impl MeshNode {
    const INVALID: MeshNode = MeshNode {
        x: 0.0,
        y: 0.0,
        k: 0.0,
        f_pullback: [0.0; 3],
        f_int: [0.0; 3],
        valid: false,
    };

    pub fn pullback(&self) -> Vec3 {
        Vec3::from(self.f_pullback)
    }

    pub fn integral(&self) -> Vec3 {
        Vec3::from(self.f_int)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshParams {
    pub origin: (f64, f64),
    pub k0: f64,
    pub branch: u8,
    pub h_beta: f64,
    pub h_gamma: f64,
    pub n_beta: usize,
    pub n_gamma: usize,
    /// Worker threads for the γ-rows; 0 lets rayon decide.
    pub workers: usize,
    pub options: MarchOptions,
}

impl MeshParams {
    pub fn new(origin: (f64, f64), k0: f64, h: f64, n: usize) -> Self {
        Self {
            origin,
            k0,
            branch: 0,
            h_beta: h,
            h_gamma: h,
            n_beta: n,
            n_gamma: n,
            workers: 0,
            options: MarchOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.origin.0, self.origin.1, self.k0, self.h_beta, self.h_gamma]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("mesh parameters must be finite".into()));
        }
        if !(self.k0 > 0.0) {
            return Err(Error::Config(format!("K0 must be positive, got {}", self.k0)));
        }
        if self.h_beta == 0.0 || self.h_gamma == 0.0 {
            return Err(Error::Config("steps must be nonzero".into()));
        }
        if self.n_beta < 2 || self.n_gamma < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2x2 nodes, got {}x{}",
                self.n_beta, self.n_gamma
            )));
        }
        if self.branch > 3 {
            return Err(Error::Config(format!("branch must be 0..=3, got {}", self.branch)));
        }
        Ok(())
    }
}

/// Nodes indexed `[i_β][i_γ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoMesh {
    pub grid: Vec<Vec<MeshNode>>,
    pub params: MeshParams,
    pub surface: SurfaceDef,
}

impl IsoMesh {
    pub fn node(&self, i_beta: usize, i_gamma: usize) -> &MeshNode {
        &self.grid[i_beta][i_gamma]
    }

    pub fn valid_count(&self) -> usize {
        self.grid.iter().flatten().filter(|n| n.valid).count()
    }

    pub fn max_integral_drift(&self) -> f64 {
        self.grid
            .iter()
            .flatten()
            .filter(|n| n.valid)
            .map(|n| (n.pullback() - n.integral()).norm())
            .fold(0.0, f64::max)
    }
}

fn node_from(surface: &SurfaceDef, s: &MarchState) -> MeshNode {
    match surface.position(s.x, s.y) {
        Ok(p) => MeshNode {
            x: s.x,
            y: s.y,
            k: s.k,
            f_pullback: p.into(),
            f_int: s.f_int.into(),
            valid: true,
        },
        Err(_) => MeshNode::INVALID,
    }
}

// Marches `n` nodes from `start` (inclusive); the run stops at the first failure.
fn march_line(
    surface: &SurfaceDef,
    start: MarchState,
    dir: Direction,
    h: f64,
    n: usize,
    opts: &MarchOptions,
) -> Vec<Option<MarchState>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = Some(start);
    for i in 0..n {
        if i > 0 {
            cur = cur.and_then(|s| rk4_step(surface, &s, dir, h, opts).ok());
        }
        out.push(cur);
    }
    out
}

/// The γ = 0 row is marched along β first, then every β index is marched along γ.
pub fn build_mesh(surface: &SurfaceDef, params: &MeshParams) -> Result<IsoMesh> {
    use rayon::prelude::*;

    params.validate()?;
    let (x0, y0) = params.origin;
    let opts = params.options;
    let seed = MarchState::seed(surface, x0, y0, params.k0, params.branch, &opts)?;
    let row = march_line(surface, seed, Direction::Beta, params.h_beta, params.n_beta, &opts);

    let march = |start: &Option<MarchState>| -> Vec<MeshNode> {
        match start {
            None => vec![MeshNode::INVALID; params.n_gamma],
            Some(s) => march_line(surface, *s, Direction::Gamma, params.h_gamma, params.n_gamma, &opts)
                .iter()
                .map(|st| st.as_ref().map_or(MeshNode::INVALID, |st| node_from(surface, st)))
                .collect(),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(params.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let grid: Vec<Vec<MeshNode>> = pool.install(|| row.par_iter().map(march).collect());

    Ok(IsoMesh {
        grid,
        params: params.clone(),
        surface: surface.clone(),
    })
}

/// Endpoint discrepancy between β-then-γ and γ-then-β after `n` steps each:
/// `max(|Δx|, |Δy|, |ΔK|/K, ‖Δf‖)`.
pub fn path_independence_check(surface: &SurfaceDef, params: &MeshParams, n: usize) -> Result<f64> {
    let (x0, y0) = params.origin;
    let opts = params.options;
    let seed = MarchState::seed(surface, x0, y0, params.k0, params.branch, &opts)?;
    let run = |first: Direction, h1: f64, second: Direction, h2: f64| -> Result<MarchState> {
        let mut s = seed;
        for _ in 0..n {
            s = rk4_step(surface, &s, first, h1, &opts)?;
        }
        for _ in 0..n {
            s = rk4_step(surface, &s, second, h2, &opts)?;
        }
        Ok(s)
    };
    let a = run(Direction::Beta, params.h_beta, Direction::Gamma, params.h_gamma)?;
    let b = run(Direction::Gamma, params.h_gamma, Direction::Beta, params.h_beta)?;
    Ok(a.distance(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_surface;

    fn cylinder() -> SurfaceDef {
        parse_surface("builtin:cylinder?R=2").unwrap()
    }

    fn seed(s: &SurfaceDef, x: f64, y: f64) -> MarchState {
        MarchState::seed(s, x, y, 1.0, 0, &MarchOptions::default()).unwrap()
    }

    #[test]
    fn cylinder_single_steps() {
        let s = cylinder();
        let opts = MarchOptions::default();
        let st = seed(&s, 0.0, 0.0);
        let g = rk4_step(&s, &st, Direction::Gamma, 0.1, &opts).unwrap();
        assert!((g.x - 0.1).abs() < 1e-14 && g.y.abs() < 1e-14 && (g.k - 1.0).abs() < 1e-14);
        let b = rk4_step(&s, &st, Direction::Beta, 0.1, &opts).unwrap();
        assert!(b.x.abs() < 1e-14 && (b.y - 0.05).abs() < 1e-14 && (b.k - 1.0).abs() < 1e-14);
        assert_eq!(rk4_step(&s, &st, Direction::Beta, 0.0, &opts).unwrap(), st);
    }

    #[test]
    fn cylinder_mesh_closed_form() {
        let s = cylinder();
        let mesh = build_mesh(&s, &MeshParams::new((0.0, 0.0), 1.0, 0.1, 11)).unwrap();
        for i in 0..11 {
            for j in 0..11 {
                let n = mesh.node(i, j);
                assert!(n.valid);
                assert!((n.x - 0.1 * j as f64).abs() < 1e-10);
                assert!((n.y - 0.05 * i as f64).abs() < 1e-10);
                assert!((n.k - 1.0).abs() < 1e-12);
            }
        }
        assert!(mesh.max_integral_drift() < 1e-5);
    }

    #[test]
    fn torus_k_follows_the_parallel_radius() {
        let s = parse_surface("builtin:torus?R=2,r=1").unwrap();
        let mesh = build_mesh(&s, &MeshParams::new((0.0, 0.0), 1.0, 0.05, 21)).unwrap();
        for row in &mesh.grid {
            for n in row.iter().filter(|n| n.valid) {
                assert!((n.k - (2.0 + n.x.cos()) / 3.0).abs() < 1e-6, "{n:?}");
            }
        }
        assert_eq!(mesh.valid_count(), 21 * 21);
    }

    #[test]
    fn tiny_mesh_stays_near_the_seed() {
        let s = parse_surface("builtin:graph").unwrap();
        let h = 1e-6;
        let mesh = build_mesh(&s, &MeshParams::new((0.5, 0.5), 1.0, h, 2)).unwrap();
        let f0 = s.position(0.5, 0.5).unwrap();
        for n in mesh.grid.iter().flatten() {
            assert!((n.pullback() - f0).norm() < 3.0 * h);
        }
    }

    #[test]
    fn failures_truncate_the_row() {
        // graph domain is [0.1, 1]²: marching in +γ from near the edge leaves it
        let s = parse_surface("builtin:graph").unwrap();
        let mut p = MeshParams::new((0.9, 0.5), 1.0, 0.05, 10);
        p.h_beta = 0.01;
        let mesh = build_mesh(&s, &p).unwrap();
        for row in &mesh.grid {
            let first_bad = row.iter().position(|n| !n.valid).unwrap_or(row.len());
            assert!(first_bad >= 1 && first_bad < row.len());
            assert!(row[first_bad..].iter().all(|n| !n.valid));
        }
    }

    #[test]
    fn seed_errors() {
        let sphere = parse_surface("builtin:sphere").unwrap();
        assert!(matches!(
            build_mesh(&sphere, &MeshParams::new((1.0, 0.0), 1.0, 0.1, 3)),
            Err(Error::SeedUmbilic { .. })
        ));
        let g = parse_surface("builtin:graph").unwrap();
        assert!(matches!(
            build_mesh(&g, &MeshParams::new((0.0, 0.0), 1.0, 0.1, 3)),
            Err(Error::SeedOutOfDomain { .. })
        ));
        assert!(matches!(
            build_mesh(&g, &MeshParams::new((0.5, 0.5), 1.0, 0.1, 1)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_mesh(&g, &MeshParams::new((0.5, 0.5), -1.0, 0.1, 3)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn path_independence_examples() {
        let c = cylinder();
        let p = MeshParams::new((0.0, 0.0), 1.0, 0.1, 2);
        assert!(path_independence_check(&c, &p, 10).unwrap() <= 1e-12);
        assert_eq!(path_independence_check(&c, &p, 0).unwrap(), 0.0);
        let t = parse_surface("builtin:torus").unwrap();
        let d1 = path_independence_check(&t, &MeshParams::new((0.0, 0.0), 1.0, 0.05, 2), 10).unwrap();
        assert!(d1 <= 1e-7, "{d1}");
    }

    #[test]
    fn path_discrepancy_has_fourth_order() {
        // same endpoint, halved step
        let t = parse_surface("builtin:torus").unwrap();
        let d = |h: f64, n: usize| {
            path_independence_check(&t, &MeshParams::new((0.3, 0.0), 1.0, h, 2), n).unwrap()
        };
        let (a, b, c) = (d(0.1, 5), d(0.05, 10), d(0.025, 20));
        for r in [a / b, b / c] {
            assert!((12.0..=20.0).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn doubling_k0_is_doubling_the_step() {
        let c = cylinder();
        let mut a = MeshParams::new((0.0, 0.0), 2.0, 0.05, 6);
        let m2 = build_mesh(&c, &a).unwrap();
        a.k0 = 1.0;
        a.h_beta = 0.1;
        a.h_gamma = 0.1;
        let m1 = build_mesh(&c, &a).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((m2.node(i, j).x - m1.node(i, j).x).abs() < 1e-9);
                assert!((m2.node(i, j).y - m1.node(i, j).y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_the_mesh() {
        let s = parse_surface(
            "X = (2 + cos(x + 0.3*y))*cos(y + 0.2*sin(x)); \
             Y = (2 + cos(x + 0.3*y))*sin(y + 0.2*sin(x)); Z = sin(x + 0.3*y); periodic = x,y",
        )
        .unwrap();
        let mut p = MeshParams::new((0.5, 0.5), 1.0, 0.05, 9);
        p.workers = 1;
        let a = build_mesh(&s, &p).unwrap();
        p.workers = 4;
        let b = build_mesh(&s, &p).unwrap();
        assert_eq!(a.grid, b.grid);
    }
}
