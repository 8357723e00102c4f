//! Desk-scale numerical verification of sharp Sobolev, isoperimetric and
//! Michael–Simon inequalities on rotationally symmetric model manifolds of
//! nonnegative curvature, following the ABP transport construction.

pub mod error;
pub mod geodesy;
pub mod harness;
pub mod mesh;
pub mod models;
pub mod numeric;
pub mod potential;
pub mod submanifold;
pub mod tolerance;
pub mod transport;

pub use error::{Error, Result};
pub use models::{CurvatureClass, PolarPoint, WarpedModel, WarpedProfile};
