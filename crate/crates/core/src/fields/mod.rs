//! Periodic grids, sampled fields, and their Fourier calculus.

mod field;
mod grid;
pub mod snapshot;
pub mod spectral;

pub use field::{ScalarField, VectorField};
pub use grid::Grid;
pub use spectral::{
    curl, divergence, fourier_truncate, gradient, hs_seminorm, inv_laplacian, jacobian, laplacian, leray_project,
    spectral_gradient, DiffOp, Field, Spectrum, Truncation,
};
