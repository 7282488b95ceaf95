//! Isothermic reparameterization of parametric surfaces.
//!
//! Given a regular parametric surface with no umbilic points, the library
//! rotates the coordinate frame onto principal curvature directions, tests
//! whether a conformal curvature-line chart exists, integrates it, and checks
//! the resulting mesh.

pub mod cli;
pub mod error;
pub mod forms;
pub mod integrator;
pub mod isothermic;
pub mod obj;
pub mod report;
pub mod surface;
pub mod verify;

pub use error::{Error, Position, Result};
