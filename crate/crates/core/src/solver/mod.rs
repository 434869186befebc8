//! Time integration on the 2D torus: semi-Lagrangian density transport
//! followed by an implicit variable-density Stokes step.

mod advect;
mod config;
mod continuation;
mod momentum;
mod ops;
mod scenario;
mod state;
mod step;

pub use advect::{advect_density, Advected};
pub use config::{InnerMethod, SolverConfig, VelocityAdvection};
pub use continuation::{epsilon_continuation, ConvergenceReport, MemberSummary, PairDifference};
pub use momentum::{explicit_velocity, momentum_step, MomentumSolution};
pub use scenario::{taylor_green, Patch, Scenario};
pub use state::FluidState;
pub use step::{step, StepReport, Stepper};
