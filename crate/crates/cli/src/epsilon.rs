//! The `epsilon` verb: a family of floored runs and their consecutive differences.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Result;
use ins_core::solver::{epsilon_continuation, ConvergenceReport};

use crate::artifacts::{sha256_hex, versions, Artifacts, GridInfo, Manifest};
use crate::config::ScenarioConfig;

pub struct EpsilonOutcome {
    pub manifest: Manifest,
    pub report: ConvergenceReport,
}

impl EpsilonOutcome {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }
}

/// Passes when every member completes and the `L₂(0,T;H¹)` differences strictly decrease.
pub fn epsilon_family(cfg: &ScenarioConfig, out: &std::path::Path) -> Result<EpsilonOutcome> {
    let start = Instant::now();
    let mut art = Artifacts::create(out)?;
    let emitted = cfg.emit();
    art.write("config.toml", emitted.as_bytes())?;

    let report = epsilon_continuation(&cfg.scenario, &cfg.solver, &cfg.epsilon.eps, cfg.epsilon.sample_every)?;
    let mut csv = String::from("eps_coarse,eps_fine,l2_h1,linf_l2\n");
    for d in &report.differences {
        let _ = writeln!(csv, "{},{},{},{}", d.eps_coarse, d.eps_fine, d.l2_h1, d.linf_l2);
    }
    art.write("epsilon.csv", csv.as_bytes())?;
    art.write_json("epsilon.json", &report)?;

    let manifest = Manifest {
        verb: "epsilon".into(),
        scenario: report.scenario.clone(),
        config_sha256: sha256_hex(emitted.as_bytes()),
        versions: versions(),
        grids: vec![GridInfo { n: cfg.solver.n, d: 2 }],
        passed: !report.partial && report.monotone,
        timings: [("total".to_owned(), start.elapsed().as_secs_f64())].into(),
        artifacts: vec![],
    };
    let manifest = art.finish(manifest)?;
    Ok(EpsilonOutcome { manifest, report })
}
