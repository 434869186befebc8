//! Functional inequalities behind the a-priori theory, checked on random ensembles
//! and on solver trajectories.
//!
//! Inequalities with explicit constants are asserted sample by sample. Those with an
//! unspecified constant are fitted (largest ratio over an ensemble) and the fit is
//! compared across grid refinement.

mod checks;
mod ensemble;
mod fractional;
mod report;

pub use checks::{
    desjardins_check, ladyzhenskaya_ratio, lattice_sum, log_poincare_check, truncation_bounds, weighted_poincare_check,
    Desjardins, LogPoincare, Sides, TruncationBounds,
};
pub use ensemble::{sample_random_field, DensityModel, FieldEnsemble};
pub use fractional::{c_alpha_t, fractional_time_norm, FractionalNorm, LpSample};
pub use report::{
    evaluate_ensemble, evaluate_pair, summary_csv, EvalSettings, InequalityReport, Lemma, Refinement, SampleOutcome,
};
