//! Characteristics of the velocity field: flow maps on label grids, the inverse
//! deformation gradient, the twisted differential operators it induces, and marker
//! tracking of density patch boundaries.

mod boundary;
mod flow;
mod matrix;
mod ops;

pub use boundary::{BoundaryCurve, BoundaryTracker, HolderSample, SPACING_LIMIT};
pub use flow::{integrate_flow, FlowIntegrator, FlowMap, VelocitySlice};
pub use matrix::{det, mat_mul, op_norm, Mat2, MatrixField, IDENTITY};
pub use ops::{deformation_inverse, lagrangian_ops, DeformationInverse, LagrangianOps};
