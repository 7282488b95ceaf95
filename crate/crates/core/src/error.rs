use std::fmt;

use thiserror::Error;

/// Line/column location inside a surface document (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: Position, message: String },

    #[error("unknown builtin surface `{0}`")]
    UnknownBuiltin(String),

    #[error("unbound identifier `{name}` at {position}")]
    UnboundIdentifier { name: String, position: Position },

    #[error("missing `{0} = ...` component")]
    MissingComponent(char),

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: String, message: String },

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("point ({x}, {y}) lies outside the surface domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("degenerate immersion at ({x}, {y}): |f_x × f_y| = {cross}")]
    DegenerateImmersion { x: f64, y: f64, cross: f64 },

    #[error("degenerate metric: EG - F^2 = {0}")]
    DegenerateMetric(f64),

    #[error("umbilic point at ({x}, {y})")]
    UmbilicPoint { x: f64, y: f64 },

    #[error("hypothesis of the reduced condition does not hold: {0}")]
    HypothesisViolated(String),

    #[error("seed point ({x}, {y}) is umbilic")]
    SeedUmbilic { x: f64, y: f64 },

    #[error("seed point ({x}, {y}) lies outside the surface domain")]
    SeedOutOfDomain { x: f64, y: f64 },

    #[error("mesh has no interior node with a full 5x5 valid stencil")]
    MeshTooSmall,

    #[error("mesh is not conformal enough for the Hopf check (conformality {conformality:.3e} > {limit:.3e})")]
    NotConformalEnough { conformality: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
