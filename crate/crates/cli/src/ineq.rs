//! The `ineq` verb: inequality ensembles on one or more grids.

use std::time::Instant;

use anyhow::Result;
use ins_core::fields::Grid;
use ins_core::inequalities::{evaluate_ensemble, sample_random_field, summary_csv, InequalityReport, Lemma};
use serde::{Deserialize, Serialize};

use crate::artifacts::{sha256_hex, versions, Artifacts, GridInfo, Manifest};
use crate::config::{density_label, ScenarioConfig};

/// Offending samples serialized per report; the report itself lists every index.
pub const MAX_SERIALIZED: usize = 16;

/// One row of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub lemma: Lemma,
    pub n: usize,
    pub assertable: bool,
    pub fitted: bool,
    pub samples: usize,
    pub max_ratio: Option<f64>,
    pub violations: usize,
    pub refinement_stable: Option<bool>,
    pub passed: bool,
}

/// A sample on which an explicit-constant lemma failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub lemma: Lemma,
    pub n: usize,
    pub seed: u64,
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// Snapshot holding the weight `a` and the field `z`.
    pub fields: String,
}

pub struct SuiteOutcome {
    pub manifest: Manifest,
    pub reports: Vec<InequalityReport>,
    pub rows: Vec<SummaryRow>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }
}

pub fn inequality_suite(cfg: &ScenarioConfig, out: &std::path::Path) -> Result<SuiteOutcome> {
    let start = Instant::now();
    let mut art = Artifacts::create(out)?;
    let emitted = cfg.emit();
    art.write("config.toml", emitted.as_bytes())?;

    let suite = &cfg.ineq;
    let ensemble = suite.pinned_ensemble();
    let settings = suite.eval_settings();
    let mut per_grid: Vec<Vec<InequalityReport>> = Vec::new();
    for &n in &suite.grids {
        let t = Instant::now();
        per_grid.push(evaluate_ensemble(&ensemble, Grid::square(n), &suite.lemmas, &settings)?);
        log::info!("n = {n}: {} samples in {:.1}s", ensemble.count, t.elapsed().as_secs_f64());
    }
    for i in 1..per_grid.len() {
        let (coarse, fine) = per_grid.split_at_mut(i);
        for (c, f) in coarse[i - 1].iter_mut().zip(&fine[0]) {
            if c.lemma.fitted() {
                c.attach_refinement(f, suite.refinement_tol);
            }
        }
    }
    let reports: Vec<InequalityReport> = per_grid.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for r in &reports {
        art.write_json(&format!("ineq/{}_n{}.json", r.lemma.name(), r.n), r)?;
        for &index in r.violations.iter().take(MAX_SERIALIZED) {
            let sample = r.samples.iter().find(|s| s.index == index).expect("violation indexes a sample");
            let stem = format!("offending/{}_n{}_{index}", r.lemma.name(), r.n);
            let (a, z) = sample_random_field(&ensemble, Grid::square(r.n), index)?;
            art.write_snapshot(&format!("{stem}.snap"), r.lemma.name(), 0.0, &[a, z])?;
            let offender = Offender {
                lemma: r.lemma,
                n: r.n,
                seed: ensemble.seed,
                index,
                lhs: sample.lhs,
                rhs: sample.rhs,
                fields: format!("{stem}.snap"),
            };
            art.write_json(&format!("{stem}.json"), &offender)?;
        }
        rows.push(SummaryRow {
            lemma: r.lemma,
            n: r.n,
            assertable: r.assertable,
            fitted: r.lemma.fitted(),
            samples: r.samples.len(),
            max_ratio: r.max_ratio,
            violations: r.violations.len(),
            refinement_stable: r.refinement.as_ref().map(|f| f.stable),
            passed: r.passed(),
        });
    }
    art.write("summary.csv", summary_csv(&reports).as_bytes())?;
    art.write_json(
        "ineq.json",
        &serde_json::json!({
            "density_model": density_label(&ensemble.density_model),
            "count": ensemble.count,
            "seed": ensemble.seed,
            "rows": rows,
        }),
    )?;

    let manifest = Manifest {
        verb: "ineq".into(),
        scenario: format!("ensemble:{}", density_label(&ensemble.density_model)),
        config_sha256: sha256_hex(emitted.as_bytes()),
        versions: versions(),
        grids: suite.grids.iter().map(|&n| GridInfo { n, d: 2 }).collect(),
        passed: rows.iter().all(|r| r.passed),
        timings: [("total".to_owned(), start.elapsed().as_secs_f64())].into(),
        artifacts: vec![],
    };
    let manifest = art.finish(manifest)?;
    Ok(SuiteOutcome { manifest, reports, rows })
}
