//! The `report` verb: re-reads an output directory and summarizes it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Result;
use serde_json::Value;

use crate::artifacts::Manifest;

pub struct Summary {
    pub text: String,
    /// The recorded verdict, and every artifact still matches its hash.
    pub passed: bool,
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), |x| format!("{x:.4e}")),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

pub fn summarize(dir: &Path) -> Result<Summary> {
    let manifest = Manifest::read(dir)?;
    let stale = manifest.stale(dir);
    let mut text = String::new();
    let _ = writeln!(text, "{} / {} ({} artifacts)", manifest.verb, manifest.scenario, manifest.artifacts.len());
    let grids: Vec<String> = manifest.grids.iter().map(|g| format!("{}^{}", g.n, g.d)).collect();
    let _ = writeln!(
        text,
        "grids {}  config {}",
        grids.join(", "),
        &manifest.config_sha256[..12.min(manifest.config_sha256.len())]
    );
    for (phase, secs) in &manifest.timings {
        let _ = writeln!(text, "time {phase}: {secs:.2}s");
    }

    match manifest.verb.as_str() {
        "run" => {
            let summary: Value = serde_json::from_str(&fs::read_to_string(dir.join("apriori.json"))?)?;
            for key in ["steps_completed", "max_energy_residual", "mass_drift", "momentum_drift"] {
                let _ = writeln!(text, "{key}: {}", fmt_value(&summary[key]));
            }
            for c in summary["checks"].as_array().into_iter().flatten() {
                let mark = if c["passed"].as_bool() == Some(true) { "pass" } else { "FAIL" };
                let _ = writeln!(
                    text,
                    "[{mark}] {} {}",
                    c["name"].as_str().unwrap_or("?"),
                    c["detail"].as_str().unwrap_or("")
                );
            }
            if let Ok(f) = fs::read_to_string(dir.join("failure.json")) {
                let _ = writeln!(text, "failure: {}", f.trim());
            }
        }
        "ineq" => {
            text.push_str(&fs::read_to_string(dir.join("summary.csv"))?);
        }
        "epsilon" => {
            text.push_str(&fs::read_to_string(dir.join("epsilon.csv"))?);
        }
        _ => {}
    }
    for path in &stale {
        let _ = writeln!(text, "modified since the run: {path}");
    }
    let passed = manifest.passed && stale.is_empty();
    let _ = writeln!(text, "{}", if passed { "PASSED" } else { "FAILED" });
    Ok(Summary { text, passed })
}
