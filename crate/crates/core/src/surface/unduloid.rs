//! Meridian of a Delaunay unduloid, obtained by integrating the roulette ODE.
//!
//! The profile `(X(s), Z(s))` is parameterized by arclength with tangent
//! angle `φ`: `X' = cos φ`, `Z' = sin φ`, and constant mean curvature forces
//! `φ' = 2H − sin φ / X`. For an ellipse with semi-axes `a > b` rolling on the
//! axis, the focus traces a meridian with neck radius `a − c`, bulge radius
//! `a + c` (`c = √(a² − b²)`) and `H = 1 / (2a)`.

use crate::error::{Error, Result};

const TABLE_STEP: f64 = 1e-3;
const TABLE_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    pub x: f64,
    pub x1: f64,
    pub x2: f64,
    pub z: f64,
    pub z1: f64,
    pub z2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnduloidProfile {
    pub a: f64,
    pub b: f64,
    pub mean_curvature: f64,
    /// Arclength of the first bulge; the neck sits at `s = 0`.
    pub bulge_s: f64,
    s_first: f64,
    table: Vec<[f64; 3]>,
}

impl UnduloidProfile {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > b && b > 0.0) {
            return Err(Error::InvalidParameter {
                name: "a,b".into(),
                message: format!("unduloid needs a > b > 0 (got a={a}, b={b})"),
            });
        }
        let c = (a * a - b * b).sqrt();
        let h = 0.5 / a;
        let neck = [a - c, 0.0, std::f64::consts::FRAC_PI_2];

        // forward pass to the first bulge (φ returns to π/2 from below)
        let mut bulge_s = None;
        let mut state = neck;
        let mut s = 0.0;
        while s < 100.0 * a {
            let next = rk4(state, TABLE_STEP, h);
            let (d0, d1) = (
                state[2] - std::f64::consts::FRAC_PI_2,
                next[2] - std::f64::consts::FRAC_PI_2,
            );
            if s > 0.0 && d0 < 0.0 && d1 >= 0.0 {
                bulge_s = Some(refine_crossing(state, s, h));
                break;
            }
            state = next;
            s += TABLE_STEP;
        }
        let bulge_s = bulge_s.ok_or_else(|| Error::InvalidParameter {
            name: "a,b".into(),
            message: "unduloid profile has no bulge".into(),
        })?;

        let s_lo = -bulge_s - TABLE_MARGIN;
        let s_hi = 3.0 * bulge_s + TABLE_MARGIN;
        let n_back = (-s_lo / TABLE_STEP).ceil() as usize;
        let n_fwd = (s_hi / TABLE_STEP).ceil() as usize;

        let mut back = Vec::with_capacity(n_back);
        let mut st = neck;
        for _ in 0..n_back {
            st = rk4(st, -TABLE_STEP, h);
            back.push(st);
        }
        back.reverse();
        let mut table = back;
        table.push(neck);
        let mut st = neck;
        for _ in 0..n_fwd {
            st = rk4(st, TABLE_STEP, h);
            table.push(st);
        }

        Ok(Self {
            a,
            b,
            mean_curvature: h,
            bulge_s,
            s_first: -(n_back as f64) * TABLE_STEP,
            table,
        })
    }

    pub fn period(&self) -> f64 {
        2.0 * self.bulge_s
    }

    pub fn table_range(&self) -> (f64, f64) {
        (
            self.s_first,
            self.s_first + (self.table.len() - 1) as f64 * TABLE_STEP,
        )
    }

    /// Profile state `(X, Z, φ)` at arclength `s`: one RK4 step from the nearest
    /// tabulated node.
    pub fn state(&self, s: f64) -> [f64; 3] {
        let k = ((s - self.s_first) / TABLE_STEP).round();
        let k = k.clamp(0.0, (self.table.len() - 1) as f64) as usize;
        let s_k = self.s_first + k as f64 * TABLE_STEP;
        let ds = s - s_k;
        if ds == 0.0 {
            return self.table[k];
        }
        // outside the table range this degrades into a long single step;
        // callers keep s inside the domain, which the table covers with margin
        let n = (ds.abs() / TABLE_STEP).ceil().max(1.0) as usize;
        let step = ds / n as f64;
        let mut st = self.table[k];
        for _ in 0..n {
            st = rk4(st, step, self.mean_curvature);
        }
        st
    }

    pub fn jet(&self, s: f64) -> ProfileJet {
        let [x, z, phi] = self.state(s);
        let (sp, cp) = phi.sin_cos();
        let dphi = 2.0 * self.mean_curvature - sp / x;
        ProfileJet {
            x,
            x1: cp,
            x2: -sp * dphi,
            z,
            z1: sp,
            z2: cp * dphi,
        }
    }
}

fn rhs(st: [f64; 3], h: f64) -> [f64; 3] {
    let (sp, cp) = st[2].sin_cos();
    [cp, sp, 2.0 * h - sp / st[0]]
}

fn rk4(st: [f64; 3], ds: f64, h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], k: [f64; 3], t: f64| [a[0] + t * k[0], a[1] + t * k[1], a[2] + t * k[2]];
    let k1 = rhs(st, h);
    let k2 = rhs(add(st, k1, ds / 2.0), h);
    let k3 = rhs(add(st, k2, ds / 2.0), h);
    let k4 = rhs(add(st, k3, ds), h);
    let mut out = st;
    for i in 0..3 {
        out[i] += ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

// bisection on the step length inside [s, s + TABLE_STEP]
fn refine_crossing(start: [f64; 3], s: f64, h: f64) -> f64 {
    let target = std::f64::consts::FRAC_PI_2;
    let (mut lo, mut hi) = (0.0, TABLE_STEP);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rk4(start, mid, h)[2] < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    s + 0.5 * (lo + hi)
}
