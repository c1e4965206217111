//! Numerical tools for the fourth-order epitaxial growth model
//! `∂ₜu + Δ²u = det(D²u) + λh` in two space dimensions.
//!
//! * [`grid`]: uniform rectangular grids, finite-difference operators, norms.
//! * [`biharmonic`]: discrete bilaplacian and its inverse for clamped and
//!   hinged boundaries.
//! * [`stationary`]: the energy functional of the clamped problem, Picard and
//!   energy-descent solvers for the stationary equation, λ-continuation.
//! * [`radial`]: the rotationally symmetric stationary problem on the unit disc.
//! * [`evolution`]: implicit-explicit time stepping with blow-up detection.
//! * [`selfsim`]: shooting for the singular self-similar profile equation.

pub mod biharmonic;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod radial;
pub mod selfsim;
pub mod stationary;

pub use error::{Error, Result};
pub use grid::{BoundaryCondition, GridField2D, GridSpec, NormReport};
