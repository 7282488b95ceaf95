//! Rotation angle onto principal directions, the rotated frames, the scaling
//! PDE for `K`, the chart Jacobian and the existence condition.

#![allow(non_snake_case)]

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::error::{Error, Result};
use crate::forms::{fundamental, is_umbilic, FundamentalData, DEFAULT_UMBILIC_TOL};
use crate::surface::{Jet2, SurfaceDef, Vec3};

/// Relative step for first differences of α.
pub const GRADIENT_STEP: f64 = 1e-5;
/// Relative step for the outer differences of the existence condition.
pub const RESIDUAL_STEP: f64 = 1e-4;
/// Relative step for the mixed difference of `ln(G/E)`.
pub const MIXED_STEP: f64 = 1e-3;
/// Relative tolerance for the hypotheses of the reduced conditions.
pub const HYPOTHESIS_TOL: f64 = 1e-9;

fn scaled_step(h: Option<f64>, rel: f64, x: f64, y: f64) -> f64 {
    h.unwrap_or(rel * 1f64.max(x.abs()).max(y.abs()))
}

/// Anything that yields fundamental-form data on a chart.
pub trait FieldSource {
    fn fundamental_at(&self, x: f64, y: f64) -> Result<FundamentalData>;
}

impl FieldSource for SurfaceDef {
    fn fundamental_at(&self, x: f64, y: f64) -> Result<FundamentalData> {
        fundamental(&self.jet(x, y)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameAngle {
    pub alpha: f64,
    /// Quarter-turn offset from the principal value, in `0..4`.
    pub branch: u8,
    pub x: f64,
    pub y: f64,
}

/// Principal value of `½·atan(num/den)` in `[−π/4, π/4]`.
fn principal_alpha(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        FRAC_PI_4 * num.signum() * (num != 0.0) as i32 as f64
    } else {
        0.5 * (num / den).atan()
    }
}

/// Shifts `a` by a multiple of π/2 so that it lies within π/4 of `target`.
pub fn unwrap_quarter(a: f64, target: f64) -> f64 {
    a + ((target - a) / FRAC_PI_2).round() * FRAC_PI_2
}

pub fn alpha(
    fd: &FundamentalData,
    p: (f64, f64),
    branch: u8,
    hint: Option<&FrameAngle>,
    umbilic_tol: f64,
) -> Result<FrameAngle> {
    if branch > 3 {
        return Err(Error::Config(format!("branch must be 0..=3, got {branch}")));
    }
    if is_umbilic(fd, umbilic_tol) {
        return Err(Error::UmbilicPoint { x: p.0, y: p.1 });
    }
    let (num, den) = fd.alpha_terms();
    let a0 = principal_alpha(num, den);
    let a = match hint {
        Some(h) => unwrap_quarter(a0, h.alpha),
        None => a0 + branch as f64 * FRAC_PI_2,
    };
    let k = ((a - a0) / FRAC_PI_2).round() as i64;
    Ok(FrameAngle {
        alpha: a,
        branch: k.rem_euclid(4) as u8,
        x: p.0,
        y: p.1,
    })
}

fn alpha_at<S: FieldSource + ?Sized>(
    src: &S,
    x: f64,
    y: f64,
    hint: Option<&FrameAngle>,
    branch: u8,
    tol: f64,
) -> Result<FrameAngle> {
    let fd = src.fundamental_at(x, y)?;
    alpha(&fd, (x, y), branch, hint, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaGradient {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub fd_step: f64,
    /// Estimated error of each component, `|D(2h) − D(h)|/3` plus a round-off floor.
    pub truncation: [f64; 2],
}

// central first differences of the unwrapped angle at step `h`
fn angle_differences<S: FieldSource + ?Sized>(
    src: &S,
    c: &FrameAngle,
    h: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let at = |x, y| alpha_at(src, x, y, Some(c), c.branch, tol).map(|a| a.alpha);
    let ax = (at(c.x + h, c.y)? - at(c.x - h, c.y)?) / (2.0 * h);
    let ay = (at(c.x, c.y + h)? - at(c.x, c.y - h)?) / (2.0 * h);
    Ok((ax, ay))
}

pub fn alpha_gradient<S: FieldSource + ?Sized>(
    src: &S,
    p: (f64, f64),
    branch: u8,
    h: Option<f64>,
    umbilic_tol: f64,
) -> Result<AlphaGradient> {
    let h = scaled_step(h, GRADIENT_STEP, p.0, p.1);
    let c = alpha_at(src, p.0, p.1, None, branch, umbilic_tol)?;
    let (ax, ay) = angle_differences(src, &c, h, umbilic_tol)?;
    let (ax2, ay2) = angle_differences(src, &c, 2.0 * h, umbilic_tol)?;
    let floor = 64.0 * f64::EPSILON * (1.0 + c.alpha.abs()) / h;
    Ok(AlphaGradient {
        alpha_x: ax,
        alpha_y: ay,
        fd_step: h,
        truncation: [(ax2 - ax).abs() / 3.0 + floor, (ay2 - ay).abs() / 3.0 + floor],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameVectors {
    pub d1: Vec3,
    pub d2: Vec3,
    pub f_gamma: Vec3,
    pub f_beta: Vec3,
    pub k: f64,
}

pub fn frames(j: &Jet2, fd: &FundamentalData, a: &FrameAngle, k: f64) -> FrameVectors {
    let d1 = j.fx / fd.E.sqrt();
    let d2 = (j.fy - j.fx * (fd.F / fd.E)) / fd.w();
    let (s, c) = a.alpha.sin_cos();
    FrameVectors {
        d1,
        d2,
        f_gamma: (d1 * c + d2 * s) * k,
        f_beta: (-d1 * s + d2 * c) * k,
        k,
    }
}

/// Metric part of the scaling PDE, `(P1, P2)`.
pub fn metric_terms(fd: &FundamentalData) -> (f64, f64) {
    let (E, F, G) = (fd.E, fd.F, fd.G);
    let r = F / E;
    let sqrt_e = E.sqrt();
    let p1 = (r * r * fd.E_x - 2.0 * r * fd.F_x + fd.G_x) / (2.0 * (G - F * r) * sqrt_e);
    let p2 = (-fd.E_y - r * fd.E_x + 2.0 * fd.F_x) / (2.0 * E * fd.w());
    (p1, p2)
}

/// Angle part of the scaling PDE, `(Q1, Q2)`.
pub fn angle_terms(fd: &FundamentalData, g: &AlphaGradient) -> (f64, f64) {
    let q1 = (g.alpha_y - fd.F / fd.E * g.alpha_x) / fd.w();
    let q2 = g.alpha_x / fd.E.sqrt();
    (q1, q2)
}

/// `(K_γ, K_β)`.
pub fn k_rhs(fd: &FundamentalData, a: &FrameAngle, g: &AlphaGradient, k: f64) -> (f64, f64) {
    let (p1, p2) = metric_terms(fd);
    let (q1, q2) = angle_terms(fd, g);
    let (s, c) = a.alpha.sin_cos();
    let (u, v) = (p1 + q1, p2 + q2);
    (k * k * (u * c - v * s), k * k * (-u * s - v * c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartJacobian {
    pub x_gamma: f64,
    pub x_beta: f64,
    pub y_gamma: f64,
    pub y_beta: f64,
}

impl ChartJacobian {
    pub fn determinant(&self) -> f64 {
        self.x_gamma * self.y_beta - self.x_beta * self.y_gamma
    }
}

pub fn chart_rhs(fd: &FundamentalData, a: &FrameAngle, k: f64) -> ChartJacobian {
    let (s, c) = a.alpha.sin_cos();
    let sqrt_e = fd.E.sqrt();
    let shear = fd.F / (sqrt_e * fd.W);
    let w = fd.w();
    ChartJacobian {
        x_gamma: k * (c / sqrt_e - shear * s),
        x_beta: k * (-s / sqrt_e - shear * c),
        y_gamma: k * s / w,
        y_beta: k * c / w,
    }
}

// P1, P2, Q1, Q2 and the α gradient at one point
#[derive(Debug, Clone, Copy)]
struct Assembled {
    fd: FundamentalData,
    p1: f64,
    p2: f64,
    q1: f64,
    q2: f64,
    alpha_x: f64,
}

fn assemble<S: FieldSource + ?Sized>(
    src: &S,
    x: f64,
    y: f64,
    branch: u8,
    h: f64,
    tol: f64,
) -> Result<Assembled> {
    let fd = src.fundamental_at(x, y)?;
    let c = alpha(&fd, (x, y), branch, None, tol)?;
    let (ax, ay) = angle_differences(src, &c, h, tol)?;
    let g = AlphaGradient {
        alpha_x: ax,
        alpha_y: ay,
        fd_step: h,
        truncation: [0.0; 2],
    };
    let (p1, p2) = metric_terms(&fd);
    let (q1, q2) = angle_terms(&fd, &g);
    Ok(Assembled {
        fd,
        p1,
        p2,
        q1,
        q2,
        alpha_x: ax,
    })
}

// Unit-frame derivatives D1 = ∂x/√E and D2 = (∂y − (F/E)∂x)/w of the
// assembled fields at the centre of a 5-point stencil.
struct FrameDerivatives {
    centre: Assembled,
    d1: [f64; 4],
    d2: [f64; 4],
}

fn frame_derivatives<S: FieldSource + ?Sized>(
    src: &S,
    p: (f64, f64),
    branch: u8,
    h: Option<f64>,
    tol: f64,
) -> Result<FrameDerivatives> {
    let h = scaled_step(h, RESIDUAL_STEP, p.0, p.1);
    let (x, y) = p;
    let at = |x, y| assemble(src, x, y, branch, h, tol);
    let c = at(x, y)?;
    let (xp, xm, yp, ym) = (at(x + h, y)?, at(x - h, y)?, at(x, y + h)?, at(x, y - h)?);
    let vals = |a: &Assembled| [a.p1, a.p2, a.q1, a.q2];
    let (vxp, vxm, vyp, vym) = (vals(&xp), vals(&xm), vals(&yp), vals(&ym));
    let r = c.fd.F / c.fd.E;
    let (sqrt_e, w) = (c.fd.E.sqrt(), c.fd.w());
    let mut d1 = [0.0; 4];
    let mut d2 = [0.0; 4];
    for i in 0..4 {
        let dx = (vxp[i] - vxm[i]) / (2.0 * h);
        let dy = (vyp[i] - vym[i]) / (2.0 * h);
        d1[i] = dx / sqrt_e;
        d2[i] = (dy - r * dx) / w;
    }
    Ok(FrameDerivatives { centre: c, d1, d2 })
}

const P1: usize = 0;
const P2: usize = 1;
const Q1: usize = 2;
const Q2: usize = 3;

/// Integrability condition of the scaling PDE; zero where an isothermic chart exists.
///
/// `D1[P2] + D2[P1] + P1·Q2 − P2·Q1 + D1[Q2] + D2[Q1]`, with the outer
/// derivatives taken by central differences of the exactly assembled fields.
pub fn existence_residual<S: FieldSource + ?Sized>(
    src: &S,
    p: (f64, f64),
    branch: u8,
    h: Option<f64>,
    umbilic_tol: f64,
) -> Result<f64> {
    let d = frame_derivatives(src, p, branch, h, umbilic_tol)?;
    let c = &d.centre;
    Ok(d.d1[P2] + d.d2[P1] + c.p1 * c.q2 - c.p2 * c.q1 + d.d1[Q2] + d.d2[Q1])
}

/// The condition with the angle terms grouped as they appear in the source
/// text: `D2[P1] + D1[P2] + P1Q2 − P2Q1 − (D1[Q2] + Q1Q2 + D2[Q1] − (F/E)Q2·α_x/w)`.
/// It does not vanish on every isothermic chart; kept for comparison.
pub fn existence_residual_printed<S: FieldSource + ?Sized>(
    src: &S,
    p: (f64, f64),
    branch: u8,
    h: Option<f64>,
    umbilic_tol: f64,
) -> Result<f64> {
    let d = frame_derivatives(src, p, branch, h, umbilic_tol)?;
    let c = &d.centre;
    let r = c.fd.F / c.fd.E;
    let bracket = d.d1[Q2] + c.q1 * c.q2 + d.d2[Q1] - r * c.q2 * c.alpha_x / c.fd.w();
    Ok(d.d2[P1] + d.d1[P2] + c.p1 * c.q2 - c.p2 * c.q1 - bracket)
}

/// Reduced forms of the existence condition under chart hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// `F = 0`.
    Orthogonal,
    /// `F = 0`, `E = G`: the condition becomes `Δα / E`.
    Isothermal,
    /// `F = 0`, `m = 0`: α vanishes and the condition is `[ln(G/E)]_xy`.
    CurvatureLine,
}

impl Reduction {
    pub fn holds(self, fd: &FundamentalData) -> bool {
        let orthogonal = fd.F.abs() <= HYPOTHESIS_TOL * (fd.E * fd.G).sqrt();
        orthogonal
            && match self {
                Reduction::Orthogonal => true,
                Reduction::Isothermal => (fd.E - fd.G).abs() <= HYPOTHESIS_TOL * (fd.E + fd.G),
                Reduction::CurvatureLine => {
                    fd.m.abs() <= HYPOTHESIS_TOL * (fd.l.abs() + fd.n.abs()) + crate::forms::EPS_ABS
                }
            }
    }
}

/// Most specific reduction whose hypothesis holds, if any.
pub fn select_reduction(fd: &FundamentalData) -> Option<Reduction> {
    [
        Reduction::CurvatureLine,
        Reduction::Isothermal,
        Reduction::Orthogonal,
    ]
    .into_iter()
    .find(|r| r.holds(fd))
}

pub fn existence_residual_special<S: FieldSource + ?Sized>(
    src: &S,
    p: (f64, f64),
    case: Reduction,
    h: Option<f64>,
    umbilic_tol: f64,
) -> Result<f64> {
    let (x, y) = p;
    let fd = src.fundamental_at(x, y)?;
    if !case.holds(&fd) {
        return Err(Error::HypothesisViolated(format!(
            "{case:?} reduction at ({x}, {y}): E={}, F={}, G={}, m={}",
            fd.E, fd.F, fd.G, fd.m
        )));
    }
    match case {
        Reduction::CurvatureLine => {
            let h = scaled_step(h, MIXED_STEP, x, y);
            let lg = |x, y| -> Result<f64> {
                let f = src.fundamental_at(x, y)?;
                Ok((f.G / f.E).ln())
            };
            Ok((lg(x + h, y + h)? - lg(x + h, y - h)? - lg(x - h, y + h)? + lg(x - h, y - h)?)
                / (4.0 * h * h))
        }
        Reduction::Isothermal => {
            let h = scaled_step(h, RESIDUAL_STEP, x, y);
            let c = alpha(&fd, p, 0, None, umbilic_tol)?;
            let at = |x, y| alpha_at(src, x, y, Some(&c), 0, umbilic_tol).map(|a| a.alpha);
            let lap = (at(x + h, y)? + at(x - h, y)? + at(x, y + h)? + at(x, y - h)?
                - 4.0 * c.alpha)
                / (h * h);
            Ok(lap / fd.E)
        }
        Reduction::Orthogonal => {
            let h = scaled_step(h, RESIDUAL_STEP, x, y);
            // a = G_x/(2G√E), b = E_y/(2E√G), c = α_x/√E, d = α_y/√G
            let fields = |x, y| -> Result<([f64; 4], f64, f64)> {
                let f = src.fundamental_at(x, y)?;
                let c = alpha(&f, (x, y), 0, None, umbilic_tol)?;
                let (ax, ay) = angle_differences(src, &c, h, umbilic_tol)?;
                let (se, sg) = (f.E.sqrt(), f.G.sqrt());
                Ok((
                    [f.G_x / (2.0 * f.G * se), f.E_y / (2.0 * f.E * sg), ax / se, ay / sg],
                    ax,
                    ay,
                ))
            };
            let (_, ax, ay) = fields(x, y)?;
            let (xp, xm) = (fields(x + h, y)?.0, fields(x - h, y)?.0);
            let (yp, ym) = (fields(x, y + h)?.0, fields(x, y - h)?.0);
            let dx = |i: usize| (xp[i] - xm[i]) / (2.0 * h);
            let dy = |i: usize| (yp[i] - ym[i]) / (2.0 * h);
            let (se, sg) = (fd.E.sqrt(), fd.G.sqrt());
            Ok(dy(0) / sg - dx(1) / se
                + (fd.G_x * ax + fd.E_y * ay) / (2.0 * fd.G * fd.E)
                + dx(2) / se
                + dy(3) / sg)
        }
    }
}

/// Convenience: α at a surface point with the default umbilic tolerance.
pub fn alpha_on(surface: &SurfaceDef, x: f64, y: f64, branch: u8) -> Result<FrameAngle> {
    alpha_at(surface, x, y, None, branch, DEFAULT_UMBILIC_TOL)
}
