//! Simulation and verification harness for the inhomogeneous incompressible
//! Navier–Stokes equations on the periodic unit torus, with density allowed to vanish.
//!
//! The field substrate in [`fields`] is generic over [`Real`] (`f32` or `f64`);
//! the solver and the analysis layers work in `f64`.

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod inequalities;
pub mod interp;
pub mod lagrangian;
pub mod scalar;
pub mod solver;
pub mod twisted_div;

pub use error::{Error, Result};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type ScalarField = fields::ScalarField<f64>;
pub type VectorField = fields::VectorField<f64>;
pub type Spectrum = fields::Spectrum<f64>;
