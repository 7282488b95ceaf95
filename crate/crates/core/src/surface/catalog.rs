//! Built-in surfaces with closed-form 2-jets.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use super::unduloid::UnduloidProfile;
use super::{Domain, Jet2, Vec3};
use crate::error::{Error, Result};

/// Test polynomial used by the `graph` builtin: `z = x² y`.
pub const GRAPH_POLYNOMIAL: &str = "x^2*y";

#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Plane,
    Cylinder { radius: f64 },
    Torus { major: f64, minor: f64 },
    Catenoid { c: f64 },
    Graph,
    Sphere { radius: f64 },
    Unduloid(Arc<UnduloidProfile>),
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
}

#[derive(Debug, Clone)]
pub struct BuiltinDescriptor {
    pub name: &'static str,
    pub params: &'static [ParamSpec],
    pub description: &'static str,
}

/// Catalog in alphabetical order.
pub fn builtin_catalog() -> Vec<BuiltinDescriptor> {
    vec![
        BuiltinDescriptor {
            name: "catenoid",
            params: &[ParamSpec { name: "c", default: 1.0 }],
            description: "(c cosh(x/c) cos y, c cosh(x/c) sin y, x)",
        },
        BuiltinDescriptor {
            name: "cylinder",
            params: &[ParamSpec { name: "R", default: 2.0 }],
            description: "(R cos y, R sin y, x)",
        },
        BuiltinDescriptor {
            name: "graph",
            params: &[],
            description: "(x, y, x^2 y)",
        },
        BuiltinDescriptor {
            name: "plane",
            params: &[],
            description: "(x, y, 0)",
        },
        BuiltinDescriptor {
            name: "sphere",
            params: &[ParamSpec { name: "R", default: 1.0 }],
            description: "(R sin x cos y, R sin x sin y, R cos x)",
        },
        BuiltinDescriptor {
            name: "torus",
            params: &[ParamSpec { name: "R", default: 2.0 }, ParamSpec { name: "r", default: 1.0 }],
            description: "((R + r cos x) cos y, (R + r cos x) sin y, r sin x)",
        },
        BuiltinDescriptor {
            name: "unduloid",
            params: &[ParamSpec { name: "a", default: 1.0 }, ParamSpec { name: "b", default: 0.8 }],
            description: "(X(x) cos y, X(x) sin y, Z(x)), Delaunay meridian in arclength",
        },
    ]
}

pub(crate) fn instantiate(name: &str, args: &[(String, f64)]) -> Result<(Builtin, Domain)> {
    let desc = builtin_catalog()
        .into_iter()
        .find(|d| d.name == name)
        .ok_or_else(|| Error::UnknownBuiltin(name.to_string()))?;
    for (k, _) in args {
        if !desc.params.iter().any(|p| p.name == k) {
            return Err(Error::InvalidParameter {
                name: k.clone(),
                message: format!("`{name}` has no such parameter"),
            });
        }
    }
    let get = |key: &str| -> f64 {
        args.iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .unwrap_or_else(|| desc.params.iter().find(|p| p.name == key).unwrap().default)
    };
    let positive = |key: &str| -> Result<f64> {
        let v = get(key);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::InvalidParameter {
                name: key.into(),
                message: format!("must be positive and finite, got {v}"),
            })
        }
    };
    let periodic_y = |x0: f64, x1: f64| Domain {
        x_min: x0,
        x_max: x1,
        y_min: 0.0,
        y_max: TAU,
        periodic_x: false,
        periodic_y: true,
    };
    Ok(match name {
        "plane" => (Builtin::Plane, Domain::rect(-1.0, 1.0, -1.0, 1.0)),
        "cylinder" => (
            Builtin::Cylinder {
                radius: positive("R")?,
            },
            periodic_y(-5.0, 5.0),
        ),
        "torus" => {
            let (major, minor) = (positive("R")?, positive("r")?);
            if minor >= major {
                return Err(Error::InvalidParameter {
                    name: "r".into(),
                    message: "torus of revolution needs r < R".into(),
                });
            }
            (
                Builtin::Torus { major, minor },
                Domain {
                    periodic_x: true,
                    ..periodic_y(0.0, TAU)
                },
            )
        }
        "catenoid" => {
            let c = positive("c")?;
            (Builtin::Catenoid { c }, periodic_y(-1.5 * c, 1.5 * c))
        }
        "graph" => (Builtin::Graph, Domain::rect(0.1, 1.0, 0.1, 1.0)),
        "sphere" => (
            Builtin::Sphere {
                radius: positive("R")?,
            },
            periodic_y(0.1, PI - 0.1),
        ),
        "unduloid" => {
            let profile = UnduloidProfile::new(positive("a")?, positive("b")?)?;
            let sb = profile.bulge_s;
            (
                Builtin::Unduloid(Arc::new(profile)),
                periodic_y(-sb, 3.0 * sb),
            )
        }
        _ => unreachable!("catalog entry without constructor"),
    })
}

fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Jet of `(X(x) cos y, X(x) sin y, Z(x))` from the profile and its derivatives.
#[allow(clippy::too_many_arguments)]
fn revolution(x: f64, x1: f64, x2: f64, z: f64, z1: f64, z2: f64, theta: f64) -> Jet2 {
    let (s, c) = theta.sin_cos();
    Jet2 {
        f: v(x * c, x * s, z),
        fx: v(x1 * c, x1 * s, z1),
        fy: v(-x * s, x * c, 0.0),
        fxx: v(x2 * c, x2 * s, z2),
        fxy: v(-x1 * s, x1 * c, 0.0),
        fyy: v(-x * c, -x * s, 0.0),
    }
}

impl Builtin {
    pub fn jet(&self, x: f64, y: f64) -> Jet2 {
        match self {
            Builtin::Plane => Jet2 {
                f: v(x, y, 0.0),
                fx: v(1.0, 0.0, 0.0),
                fy: v(0.0, 1.0, 0.0),
                fxx: Vec3::zeros(),
                fxy: Vec3::zeros(),
                fyy: Vec3::zeros(),
            },
            // axis parameter x, angle y
            Builtin::Cylinder { radius } => revolution(*radius, 0.0, 0.0, x, 1.0, 0.0, y),
            Builtin::Torus { major, minor } => {
                let (s, c) = x.sin_cos();
                revolution(
                    major + minor * c,
                    -minor * s,
                    -minor * c,
                    minor * s,
                    minor * c,
                    -minor * s,
                    y,
                )
            }
            Builtin::Catenoid { c } => {
                let t = x / c;
                revolution(c * t.cosh(), t.sinh(), t.cosh() / c, x, 1.0, 0.0, y)
            }
            Builtin::Graph => Jet2 {
                f: v(x, y, x * x * y),
                fx: v(1.0, 0.0, 2.0 * x * y),
                fy: v(0.0, 1.0, x * x),
                fxx: v(0.0, 0.0, 2.0 * y),
                fxy: v(0.0, 0.0, 2.0 * x),
                fyy: Vec3::zeros(),
            },
            Builtin::Sphere { radius } => {
                let (s, c) = x.sin_cos();
                revolution(
                    radius * s,
                    radius * c,
                    -radius * s,
                    radius * c,
                    -radius * s,
                    -radius * c,
                    y,
                )
            }
            Builtin::Unduloid(profile) => {
                let j = profile.jet(x);
                revolution(j.x, j.x1, j.x2, j.z, j.z1, j.z2, y)
            }
        }
    }

    /// Equivalent surface document, for the builtins that have a closed form.
    pub fn expression_document(&self) -> Option<String> {
        Some(match self {
            Builtin::Plane => "X = x\nY = y\nZ = 0\n".to_string(),
            Builtin::Cylinder { radius } => {
                format!("param R = {radius}\nX = R*cos(y)\nY = R*sin(y)\nZ = x\n")
            }
            Builtin::Torus { major, minor } => format!(
                "param R = {major}\nparam r = {minor}\n\
                 X = (R + r*cos(x))*cos(y)\nY = (R + r*cos(x))*sin(y)\nZ = r*sin(x)\n"
            ),
            Builtin::Catenoid { c } => format!(
                "param c = {c}\nX = c*cosh(x/c)*cos(y)\nY = c*cosh(x/c)*sin(y)\nZ = x\n"
            ),
            Builtin::Graph => format!("X = x\nY = y\nZ = {GRAPH_POLYNOMIAL}\n"),
            Builtin::Sphere { radius } => format!(
                "param R = {radius}\nX = R*sin(x)*cos(y)\nY = R*sin(x)*sin(y)\nZ = R*cos(x)\n"
            ),
            Builtin::Unduloid(_) => return None,
        })
    }
}
