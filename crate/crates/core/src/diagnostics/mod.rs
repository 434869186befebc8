//! Identities, a-priori functionals and comparison bounds evaluated on solver output.

mod apriori;
mod bounds;
mod record;

pub use apriori::{apriori_functionals, AprioriReport, ShiftNorm, ShiftTriple};
pub use bounds::{gronwall_log_bound, riccati_bound_3d, rk4_scalar, threed_formulas, RiccatiBound, Series, ThreeD};
pub use record::{
    conserved_report, energy_residual, DiagnosticsRecord, DiagnosticsSettings, SliceNorms, Tracker, Trajectory,
    ENERGY_FLOOR,
};
