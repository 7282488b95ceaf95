//! Parametric surface definitions and exact second-order jets.
//!
//! A surface is either a built-in catalog entry (closed-form jets) or a triple
//! of parsed expressions evaluated with [`HyperDual`] numbers. Both produce a
//! [`Jet2`]: position plus all first and second partials at a chart point.

mod catalog;
pub mod expr;
pub mod hyperdual;
pub mod unduloid;

use std::collections::BTreeMap;

pub use catalog::{builtin_catalog, Builtin, BuiltinDescriptor, ParamSpec, GRAPH_POLYNOMIAL};
pub use expr::Expr;
pub use hyperdual::{HyperDual, Scalar};

use crate::error::{Error, Position, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Relative immersion threshold: `|f_x × f_y| ≤ EPS_IMMERSION · |f_x||f_y|` is degenerate.
pub const EPS_IMMERSION: f64 = 1e-10;

/// Closed parameter rectangle. Periodic axes accept any coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub periodic_x: bool,
    pub periodic_y: bool,
}

impl Domain {
    pub fn rect(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
            periodic_x: false,
            periodic_y: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::Domain(format!(
                "rectangle [{}, {}] x [{}, {}] must have positive side lengths",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let in_x = x.is_finite() && (self.periodic_x || (x >= self.x_min && x <= self.x_max));
        let in_y = y.is_finite() && (self.periodic_y || (y >= self.y_min && y <= self.y_max));
        in_x && in_y
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }
}

/// Position and all first/second partials of the immersion at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub f: Vec3,
    pub fx: Vec3,
    pub fy: Vec3,
    pub fxx: Vec3,
    pub fxy: Vec3,
    pub fyy: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTriple {
    pub components: [Expr; 3],
    pub params: BTreeMap<String, f64>,
}

impl ExpressionTriple {
    /// Plain `f64` evaluation of the position.
    pub fn position(&self, x: f64, y: f64) -> Vec3 {
        let [a, b, c] = &self.components;
        Vec3::new(a.eval(x, y), b.eval(x, y), c.eval(x, y))
    }

    fn jet(&self, x: f64, y: f64) -> Jet2 {
        let (hx, hy) = (HyperDual::var_x(x), HyperDual::var_y(y));
        let [a, b, c] = &self.components;
        let r = [a.eval(hx, hy), b.eval(hx, hy), c.eval(hx, hy)];
        let pick = |f: fn(&HyperDual) -> f64| Vec3::new(f(&r[0]), f(&r[1]), f(&r[2]));
        Jet2 {
            f: pick(|d| d.v),
            fx: pick(|d| d.dx),
            fy: pick(|d| d.dy),
            fxx: pick(|d| d.dxx),
            fxy: pick(|d| d.dxy),
            fyy: pick(|d| d.dyy),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    Builtin(Builtin),
    Expression(ExpressionTriple),
}

/// An immutable, validated surface definition.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceDef {
    pub name: String,
    pub kind: SurfaceKind,
    pub domain: Domain,
    /// Text the surface was parsed from (URI or document).
    pub source: String,
}

impl SurfaceDef {
    pub fn builtin(name: &str, args: &[(&str, f64)]) -> Result<Self> {
        let owned: Vec<(String, f64)> = args.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let (b, domain) = catalog::instantiate(name, &owned)?;
        let query: Vec<String> = args.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let source = if query.is_empty() {
            format!("builtin:{name}")
        } else {
            format!("builtin:{name}?{}", query.join(","))
        };
        Ok(Self {
            name: name.to_string(),
            kind: SurfaceKind::Builtin(b),
            domain,
            source,
        })
    }

    pub fn is_periodic(&self) -> (bool, bool) {
        (self.domain.periodic_x, self.domain.periodic_y)
    }

    /// Exact 2-jet at `(x, y)`.
    pub fn jet(&self, x: f64, y: f64) -> Result<Jet2> {
        if !self.domain.contains(x, y) {
            return Err(Error::OutOfDomain { x, y });
        }
        let j = match &self.kind {
            SurfaceKind::Builtin(b) => b.jet(x, y),
            SurfaceKind::Expression(t) => t.jet(x, y),
        };
        let cross = j.fx.cross(&j.fy).norm();
        let scale = j.fx.norm() * j.fy.norm();
        if !(cross > EPS_IMMERSION * scale) || !cross.is_finite() {
            return Err(Error::DegenerateImmersion { x, y, cross });
        }
        Ok(j)
    }

    /// Position only, without the immersion check.
    pub fn position(&self, x: f64, y: f64) -> Result<Vec3> {
        if !self.domain.contains(x, y) {
            return Err(Error::OutOfDomain { x, y });
        }
        Ok(match &self.kind {
            SurfaceKind::Builtin(b) => b.jet(x, y).f,
            SurfaceKind::Expression(t) => t.position(x, y),
        })
    }
}

/// Parses a `builtin:<name>?k=v,...` URI or a surface document.
pub fn parse_surface(text: &str) -> Result<SurfaceDef> {
    let trimmed = text.trim();
    if let Some(rest) = trimmed.strip_prefix("builtin:") {
        return parse_builtin_uri(rest, trimmed);
    }
    parse_document(text)
}

fn parse_builtin_uri(rest: &str, full: &str) -> Result<SurfaceDef> {
    let col0 = "builtin:".len() + 1;
    let (name, query) = match rest.split_once('?') {
        Some((n, q)) => (n.trim(), Some(q)),
        None => (rest.trim(), None),
    };
    let mut args = Vec::new();
    if let Some(q) = query {
        let mut column = col0 + name.len() + 1;
        for item in q.split(',') {
            let here = Position { line: 1, column };
            column += item.chars().count() + 1;
            if item.trim().is_empty() {
                continue;
            }
            let (k, v) = item.split_once('=').ok_or(Error::Syntax {
                position: here,
                message: format!("expected `key=value`, got `{item}`"),
            })?;
            let val: f64 = v.trim().parse().map_err(|_| Error::Syntax {
                position: here,
                message: format!("`{}` is not a number", v.trim()),
            })?;
            args.push((k.trim().to_string(), val));
        }
    }
    let (b, domain) = catalog::instantiate(name, &args)?;
    Ok(SurfaceDef {
        name: name.to_string(),
        kind: SurfaceKind::Builtin(b),
        domain,
        source: full.to_string(),
    })
}

struct Statement<'a> {
    key: &'a str,
    value: &'a str,
    line: usize,
    key_col: usize,
    value_col: usize,
}

fn statements(text: &str) -> Result<Vec<Statement<'_>>> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut offset = 0;
        for seg in content.split(';') {
            let seg_start = offset;
            offset += seg.len() + 1;
            if seg.trim().is_empty() {
                continue;
            }
            let col = |byte: usize| content[..byte].chars().count() + 1;
            let eq = seg.find('=').ok_or_else(|| Error::Syntax {
                position: Position {
                    line,
                    column: col(seg_start + seg.len() - seg.trim_start().len()),
                },
                message: "expected `<key> = <value>`".into(),
            })?;
            let key = seg[..eq].trim();
            let lead = seg[..eq].len() - seg[..eq].trim_start().len();
            let value = &seg[eq + 1..];
            out.push(Statement {
                key,
                value,
                line,
                key_col: col(seg_start + lead),
                value_col: col(seg_start + eq + 1),
            });
        }
    }
    Ok(out)
}

fn parse_document(text: &str) -> Result<SurfaceDef> {
    let stmts = statements(text)?;

    let mut params = BTreeMap::new();
    for s in &stmts {
        if let Some(name) = s.key.strip_prefix("param") {
            let name = name.trim();
            let pos = Position {
                line: s.line,
                column: s.key_col,
            };
            let valid = !name.is_empty()
                && name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_alphanumeric() || c == '_');
            if !valid || !s.key.starts_with("param ") {
                return Err(Error::Syntax {
                    position: pos,
                    message: format!("malformed parameter declaration `{}`", s.key),
                });
            }
            if matches!(name, "x" | "y" | "pi" | "e") || expr::Func::from_name(name).is_some() {
                return Err(Error::Syntax {
                    position: pos,
                    message: format!("parameter `{name}` shadows a reserved name"),
                });
            }
            let v: f64 = s.value.trim().parse().map_err(|_| Error::Syntax {
                position: Position {
                    line: s.line,
                    column: s.value_col,
                },
                message: format!("parameter value `{}` is not a number", s.value.trim()),
            })?;
            if params.insert(name.to_string(), v).is_some() {
                return Err(Error::Syntax {
                    position: pos,
                    message: format!("parameter `{name}` declared twice"),
                });
            }
        }
    }

    let mut comps: [Option<Expr>; 3] = [None, None, None];
    let mut domain = None;
    let mut periodic = (false, false);
    let mut name = None;
    for s in &stmts {
        let pos = Position {
            line: s.line,
            column: s.key_col,
        };
        let dup = || Error::Syntax {
            position: pos,
            message: format!("`{}` given twice", s.key),
        };
        match s.key {
            "X" | "Y" | "Z" => {
                let idx = (s.key.as_bytes()[0] - b'X') as usize;
                if comps[idx].is_some() {
                    return Err(dup());
                }
                comps[idx] = Some(expr::parse_expr(s.value, &params, s.line, s.value_col)?);
            }
            "domain" => {
                if domain.is_some() {
                    return Err(dup());
                }
                let mut vals = Vec::new();
                let mut col = s.value_col;
                for part in s.value.split(',') {
                    vals.push(expr::eval_constant(part, &params, s.line, col)?);
                    col += part.chars().count() + 1;
                }
                if vals.len() != 4 {
                    return Err(Error::Syntax {
                        position: pos,
                        message: format!("domain needs 4 values, got {}", vals.len()),
                    });
                }
                let d = Domain::rect(vals[0], vals[1], vals[2], vals[3]);
                d.validate()?;
                domain = Some(d);
            }
            "periodic" => {
                for axis in s.value.split(',').map(str::trim) {
                    match axis {
                        "x" => periodic.0 = true,
                        "y" => periodic.1 = true,
                        "none" | "" => {}
                        other => {
                            return Err(Error::Syntax {
                                position: Position {
                                    line: s.line,
                                    column: s.value_col,
                                },
                                message: format!("unknown periodic axis `{other}`"),
                            })
                        }
                    }
                }
            }
            "name" => {
                if name.is_some() {
                    return Err(dup());
                }
                name = Some(s.value.trim().to_string());
            }
            k if k.starts_with("param") => {}
            other => {
                return Err(Error::Syntax {
                    position: pos,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }

    let [cx, cy, cz] = comps;
    let cx = cx.ok_or(Error::MissingComponent('X'))?;
    let cy = cy.ok_or(Error::MissingComponent('Y'))?;
    let cz = cz.ok_or(Error::MissingComponent('Z'))?;
    let mut domain = domain.unwrap_or(Domain::rect(-1.0, 1.0, -1.0, 1.0));
    domain.periodic_x = periodic.0;
    domain.periodic_y = periodic.1;

    Ok(SurfaceDef {
        name: name.unwrap_or_else(|| "expression".to_string()),
        kind: SurfaceKind::Expression(ExpressionTriple {
            components: [cx, cy, cz],
            params,
        }),
        domain,
        source: text.to_string(),
    })
}
