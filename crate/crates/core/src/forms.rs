//! First and second fundamental forms, curvature and the umbilic test.

#![allow(non_snake_case)]

use crate::error::{Error, Result};
use crate::surface::{Jet2, Vec3};

/// Absolute floor in scale guards.
pub const EPS_ABS: f64 = 1e-14;

/// Default relative tolerance for [`is_umbilic`].
pub const DEFAULT_UMBILIC_TOL: f64 = 1e-8;

/// Fundamental-form data at one chart point, all from exact jets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalData {
    pub E: f64,
    pub F: f64,
    pub G: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    /// Unit normal `f_x × f_y / |f_x × f_y|`.
    pub N: Vec3,
    pub E_x: f64,
    pub E_y: f64,
    pub F_x: f64,
    pub G_x: f64,
    /// Area density `√(EG − F²)`.
    pub W: f64,
    pub fx: Vec3,
    pub fy: Vec3,
}

impl FundamentalData {
    /// `√(G − F²/E)`, the length of the second Gram-Schmidt leg.
    pub fn w(&self) -> f64 {
        self.W / self.E.sqrt()
    }

    /// Numerator and denominator of the rotation angle: `tan 2α = num / den`.
    pub fn alpha_terms(&self) -> (f64, f64) {
        let (E, F, G, l, m, n) = (self.E, self.F, self.G, self.l, self.m, self.n);
        let num = -2.0 * (-F * l + E * m) * self.W;
        let den = (2.0 * F * F - E * G) * l - 2.0 * E * F * m + E * E * n;
        (num, den)
    }

    /// Normal curvature `II(v,v) / I(v,v)` for the tangent vector `a f_x + b f_y`.
    pub fn normal_curvature(&self, a: f64, b: f64) -> f64 {
        let two = self.l * a * a + 2.0 * self.m * a * b + self.n * b * b;
        let one = self.E * a * a + 2.0 * self.F * a * b + self.G * b * b;
        two / one
    }
}

pub fn fundamental(j: &Jet2) -> Result<FundamentalData> {
    let E = j.fx.dot(&j.fx);
    let F = j.fx.dot(&j.fy);
    let G = j.fy.dot(&j.fy);
    let det = E * G - F * F;
    let cross = j.fx.cross(&j.fy);
    // same relative threshold as the immersion check, squared
    if !(det > 1e-20 * E * G) || !det.is_finite() {
        return Err(Error::DegenerateMetric(det));
    }
    let N = cross / cross.norm();
    Ok(FundamentalData {
        E,
        F,
        G,
        l: j.fxx.dot(&N),
        m: j.fxy.dot(&N),
        n: j.fyy.dot(&N),
        N,
        E_x: 2.0 * j.fxx.dot(&j.fx),
        E_y: 2.0 * j.fxy.dot(&j.fx),
        F_x: j.fxx.dot(&j.fy) + j.fx.dot(&j.fxy),
        G_x: 2.0 * j.fxy.dot(&j.fy),
        W: det.sqrt(),
        fx: j.fx,
        fy: j.fy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureData {
    pub H: f64,
    pub K_gauss: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub e1: Vec3,
    pub e2: Vec3,
}

pub fn curvature(fd: &FundamentalData) -> CurvatureData {
    let (E, F, G, l, m, n) = (fd.E, fd.F, fd.G, fd.l, fd.m, fd.n);
    let det = fd.W * fd.W;
    let H = (E * n - 2.0 * F * m + G * l) / (2.0 * det);
    let K_gauss = (l * n - m * m) / det;
    let disc = (H * H - K_gauss).max(0.0).sqrt();
    let (kappa1, kappa2) = (H + disc, H - disc);

    // (II − κ I) v = 0; take the better conditioned of the two row solutions
    let r1 = (m - kappa1 * F, -(l - kappa1 * E));
    let r2 = (n - kappa1 * G, -(m - kappa1 * F));
    let (a, b) = if r1.0.hypot(r1.1) >= r2.0.hypot(r2.1) {
        r1
    } else {
        r2
    };
    let v = fd.fx * a + fd.fy * b;
    let e1 = if v.norm() > EPS_ABS * (fd.fx.norm() + fd.fy.norm()) {
        v.normalize()
    } else {
        fd.fx.normalize()
    };
    let e2 = fd.N.cross(&e1);
    CurvatureData {
        H,
        K_gauss,
        kappa1,
        kappa2,
        e1,
        e2,
    }
}

/// Both terms of the `tan 2α` ratio vanish relative to the chart's scale.
pub fn is_umbilic(fd: &FundamentalData, tol: f64) -> bool {
    let (num, den) = fd.alpha_terms();
    let s = (fd.E + fd.G).powi(2) * (fd.l.abs() + fd.m.abs() + fd.n.abs()) + EPS_ABS;
    num.abs() <= tol * s && den.abs() <= tol * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_surface, SurfaceDef};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_at(s: &SurfaceDef, x: f64, y: f64) -> FundamentalData {
        fundamental(&s.jet(x, y).unwrap()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cylinder_forms() {
        let s = parse_surface("builtin:cylinder?R=2").unwrap();
        for (x, y) in [(0.0, 0.0), (1.3, 2.2), (-4.0, 5.9)] {
            let fd = fd_at(&s, x, y);
            assert!(close(fd.E, 1.0, 1e-15) && close(fd.F, 0.0, 1e-15) && close(fd.G, 4.0, 1e-14));
            // N = f_x × f_y points at the axis
            assert!(close(fd.l, 0.0, 1e-15) && close(fd.m, 0.0, 1e-15) && close(fd.n, 2.0, 1e-14));
            for p in [fd.E_x, fd.E_y, fd.F_x, fd.G_x] {
                assert!(p.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn plane_forms() {
        let s = parse_surface("builtin:plane").unwrap();
        let fd = fd_at(&s, 0.2, -0.3);
        assert_eq!((fd.l, fd.m, fd.n), (0.0, 0.0, 0.0));
        assert_eq!((fd.E, fd.F, fd.G), (1.0, 0.0, 1.0));
        let c = curvature(&fd);
        assert_eq!((c.H, c.K_gauss), (0.0, 0.0));
    }

    #[test]
    fn torus_metric_partials() {
        let s = parse_surface("builtin:torus?R=2,r=1").unwrap();
        let fd = fd_at(&s, 0.0, 0.4);
        assert!(close(fd.E, 1.0, 1e-15) && close(fd.F, 0.0, 1e-15) && close(fd.G, 9.0, 1e-13));
        assert!(fd.G_x.abs() < 1e-15);
        for x in [0.3, 1.1, 2.5, 4.0] {
            let fd = fd_at(&s, x, 1.0);
            let expect = -2.0 * (2.0 + x.cos()) * x.sin();
            assert!(close(fd.G_x, expect, 1e-13), "{} vs {expect}", fd.G_x);
        }
    }

    #[test]
    fn cylinder_curvature() {
        let s = parse_surface("builtin:cylinder?R=2").unwrap();
        let c = curvature(&fd_at(&s, 0.5, 0.5));
        assert!(close(c.kappa1, 0.5, 1e-15) && close(c.kappa2, 0.0, 1e-15));
        assert!(close(c.H, 0.25, 1e-15) && close(c.K_gauss, 0.0, 1e-15));
        // κ1 = 1/2 belongs to the parallel circle
        let axis = Vec3::new(0.0, 0.0, 1.0);
        assert!(c.e1.dot(&axis).abs() < 1e-14);
        assert!(close(c.e2.dot(&axis).abs(), 1.0, 1e-14));
    }

    #[test]
    fn curvature_identities_and_orthogonal_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in ["builtin:torus", "builtin:catenoid", "builtin:graph", "builtin:unduloid"] {
            let s = parse_surface(name).unwrap();
            let d = s.domain;
            for _ in 0..100 {
                let x = rng.gen_range(d.x_min..d.x_max);
                let y = rng.gen_range(d.y_min..d.y_max);
                let fd = fd_at(&s, x, y);
                let c = curvature(&fd);
                let scale = c.kappa1.abs().max(c.kappa2.abs()).max(1e-300);
                assert!(((c.kappa1 + c.kappa2) / 2.0 - c.H).abs() <= 1e-10 * scale);
                assert!((c.kappa1 * c.kappa2 - c.K_gauss).abs() <= 1e-10 * scale * scale);
                assert!(c.kappa1 >= c.kappa2);
                assert!(c.e1.dot(&c.e2).abs() <= 1e-10);
                assert!(c.e1.dot(&fd.N).abs() <= 1e-12);
                // e1 really is an eigenvector: II(e1, e2) = 0
                let to_chart = |v: Vec3| {
                    let (a, b) = (v.dot(&fd.fx), v.dot(&fd.fy));
                    let det = fd.E * fd.G - fd.F * fd.F;
                    ((fd.G * a - fd.F * b) / det, (fd.E * b - fd.F * a) / det)
                };
                let (a1, b1) = to_chart(c.e1);
                let (a2, b2) = to_chart(c.e2);
                let mixed = fd.l * a1 * a2 + fd.m * (a1 * b2 + a2 * b1) + fd.n * b1 * b2;
                assert!(mixed.abs() <= 1e-9 * scale, "{name}: II(e1,e2) = {mixed}");
                assert!(close(fd.normal_curvature(a1, b1), c.kappa1, 1e-9 * scale));
            }
        }
    }

    #[test]
    fn normal_curvature_is_bounded_by_principal_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = parse_surface("X = x + 0.3*y; Y = sin(y) + x*y; Z = x^2 - y^3 + x*y").unwrap();
        let fd = fd_at(&s, 0.3, 0.2);
        let c = curvature(&fd);
        for _ in 0..1000 {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let kn = fd.normal_curvature(t.cos(), t.sin());
            assert!(kn >= c.kappa2 - 1e-9 && kn <= c.kappa1 + 1e-9);
        }
    }

    #[test]
    fn metric_partials_match_finite_differences() {
        let h = 1e-5;
        for name in [
            "builtin:plane",
            "builtin:cylinder",
            "builtin:torus",
            "builtin:catenoid",
            "builtin:graph",
            "builtin:sphere",
            "builtin:unduloid",
        ] {
            let s = parse_surface(name).unwrap();
            let (x, y) = s.domain.center();
            let (x, y) = (x + 0.137, y - 0.071);
            let fd = fd_at(&s, x, y);
            let (px, mx) = (fd_at(&s, x + h, y), fd_at(&s, x - h, y));
            let (py, my) = (fd_at(&s, x, y + h), fd_at(&s, x, y - h));
            let scale = fd.E.max(fd.G);
            let checks = [
                (fd.E_x, (px.E - mx.E) / (2.0 * h)),
                (fd.E_y, (py.E - my.E) / (2.0 * h)),
                (fd.F_x, (px.F - mx.F) / (2.0 * h)),
                (fd.G_x, (px.G - mx.G) / (2.0 * h)),
            ];
            for (exact, approx) in checks {
                assert!(
                    (exact - approx).abs() <= 1e-6 * scale,
                    "{name}: {exact} vs {approx}"
                );
            }
        }
    }

    #[test]
    fn normal_is_unit_and_tangent_orthogonal() {
        let s = parse_surface("builtin:graph").unwrap();
        let fd = fd_at(&s, 0.7, 0.4);
        assert!((fd.N.norm() - 1.0).abs() < 1e-15);
        assert!(fd.N.dot(&fd.fx).abs() < 1e-12 * fd.fx.norm());
        assert!(fd.N.dot(&fd.fy).abs() < 1e-12 * fd.fy.norm());
    }

    #[test]
    fn umbilic_classification() {
        let sphere = parse_surface("builtin:sphere?R=1").unwrap();
        let cyl = parse_surface("builtin:cylinder?R=2").unwrap();
        let torus = parse_surface("builtin:torus?R=2,r=1").unwrap();
        for i in 0..50 {
            let t = i as f64 * 0.061;
            assert!(is_umbilic(&fd_at(&sphere, 0.2 + 0.5 * t, 3.0 * t), DEFAULT_UMBILIC_TOL));
            assert!(!is_umbilic(&fd_at(&cyl, t - 1.0, 4.0 * t), DEFAULT_UMBILIC_TOL));
            assert!(!is_umbilic(&fd_at(&torus, 2.0 * t, 5.0 * t), DEFAULT_UMBILIC_TOL));
        }
        assert!(is_umbilic(&fd_at(&parse_surface("builtin:plane").unwrap(), 0.0, 0.0), 1e-8));
    }

    #[test]
    fn swapping_the_chart_flips_normal_and_second_form() {
        let a = parse_surface("X = x; Y = y; Z = x^2*y + 0.2*y^2; domain = 0,1,0,1").unwrap();
        let b = parse_surface("X = y; Y = x; Z = y^2*x + 0.2*x^2; domain = 0,1,0,1").unwrap();
        let (fa, fb) = (fd_at(&a, 0.6, 0.3), fd_at(&b, 0.3, 0.6));
        assert!((fa.N + fb.N).norm() < 1e-15);
        assert!(close(fa.l, -fb.n, 1e-15) && close(fa.m, -fb.m, 1e-15) && close(fa.n, -fb.l, 1e-15));
        assert_eq!(
            is_umbilic(&fa, DEFAULT_UMBILIC_TOL),
            is_umbilic(&fb, DEFAULT_UMBILIC_TOL)
        );
        let (ca, cb) = (curvature(&fa), curvature(&fb));
        assert!(close(ca.kappa1, -cb.kappa2, 1e-14));
    }

    #[test]
    fn unduloid_mean_curvature_is_constant() {
        let s = parse_surface("builtin:unduloid").unwrap();
        let d = s.domain;
        let hs: Vec<f64> = (0..100)
            .map(|i| {
                let x = d.x_min + (d.x_max - d.x_min) * (i as f64 + 0.5) / 100.0;
                curvature(&fd_at(&s, x, 0.37 * i as f64)).H
            })
            .collect();
        let mean = hs.iter().sum::<f64>() / hs.len() as f64;
        let dev = hs.iter().map(|h| (h - mean).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-6, "deviation {dev}");
        // H = 1/(2a) up to the sign fixed by the normal
        assert!(close(mean.abs(), 0.5, 1e-6));
    }
}
