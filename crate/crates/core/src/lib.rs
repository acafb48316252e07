//! Numerical toolkit for boundary data of convex domains in hyperbolic 3-space.
//!
//! Conformal metrics on the sphere at infinity, ideal convex hulls and
//! Thurston metrics, cut-off approximations of complete metrics, geometry of
//! convex surfaces and their Gauss maps, and explicit realization of
//! rotationally symmetric metrics as surfaces of revolution.

pub mod cli;
pub mod conformal;
pub mod cutoff;
pub mod error;
pub mod domains;
pub mod hyp;
pub mod report;
pub mod revolve;
pub mod surfaces;
mod optim;

pub use error::{Error, Result};
