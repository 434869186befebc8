//! Batch driver: configuration, run orchestration and report emission.
//!
//! Each verb writes its artifacts and a `manifest.json` (configuration hash, versions,
//! grids, timings and a SHA-256 per artifact) into one output directory.

pub mod artifacts;
pub mod config;
pub mod epsilon;
pub mod ineq;
pub mod report;
pub mod run;

pub use artifacts::Manifest;
pub use config::{ConfigError, ScenarioConfig};
pub use epsilon::epsilon_family;
pub use ineq::inequality_suite;
pub use report::summarize;
pub use run::run_scenario;
