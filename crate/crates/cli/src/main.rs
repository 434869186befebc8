use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ins_cli::{epsilon_family, inequality_suite, run_scenario, summarize, ScenarioConfig};

/// Exit codes: 0 every assertion passed, 1 some assertion failed, 2 invalid
/// configuration or arguments, 3 I/O or internal error.
#[derive(Parser)]
#[command(name = "ins", version, about = "Periodic inhomogeneous Navier–Stokes runs and verification suites")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run one scenario and write diagnostics, snapshots and boundary series.
    Run(Target),
    /// Evaluate the inequality ensembles.
    Ineq(Target),
    /// Run the ε-floor continuation family.
    Epsilon(Target),
    /// Summarize an output directory and verify its artifact hashes.
    Report { dir: PathBuf },
}

#[derive(clap::Args)]
struct Target {
    config: PathBuf,
    /// Overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failed {
    Config(String),
    Internal(anyhow::Error),
}

fn load(target: &Target) -> Result<(ScenarioConfig, PathBuf), Failed> {
    let text = std::fs::read_to_string(&target.config)
        .with_context(|| format!("reading {}", target.config.display()))
        .map_err(Failed::Internal)?;
    let cfg = ScenarioConfig::parse(&text).map_err(|e| Failed::Config(format!("{}: {e}", target.config.display())))?;
    let out = target.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn verdict(passed: bool, out: &Path) -> bool {
    let word = if passed { "passed" } else { "FAILED" };
    eprintln!("{word}; results in {}", out.display());
    passed
}

fn execute(verb: Verb) -> Result<bool, Failed> {
    match verb {
        Verb::Run(t) => {
            let (cfg, out) = load(&t)?;
            let outcome = run_scenario(&cfg, &out).map_err(Failed::Internal)?;
            if let Some(f) = &outcome.failure {
                eprintln!("solver stopped at step {} (t = {}): {}", f.step, f.t, f.error);
            }
            for c in outcome.summary.checks.iter().filter(|c| !c.passed) {
                eprintln!("check {} failed: {}", c.name, c.detail);
            }
            Ok(verdict(outcome.passed(), &out))
        }
        Verb::Ineq(t) => {
            let (cfg, out) = load(&t)?;
            let outcome = inequality_suite(&cfg, &out).map_err(Failed::Internal)?;
            for r in outcome.rows.iter().filter(|r| !r.passed) {
                eprintln!(
                    "{} on n = {}: {} violations, refinement stable {:?}",
                    r.lemma.name(),
                    r.n,
                    r.violations,
                    r.refinement_stable
                );
            }
            Ok(verdict(outcome.passed(), &out))
        }
        Verb::Epsilon(t) => {
            let (cfg, out) = load(&t)?;
            let outcome = epsilon_family(&cfg, &out).map_err(Failed::Internal)?;
            for d in &outcome.report.differences {
                eprintln!("ε {:e} → {:e}: L2(H1) {:.4e}", d.eps_coarse, d.eps_fine, d.l2_h1);
            }
            Ok(verdict(outcome.passed(), &out))
        }
        Verb::Report { dir } => {
            let summary = summarize(&dir).map_err(Failed::Internal)?;
            print!("{}", summary.text);
            Ok(summary.passed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse().verb) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failed::Config(msg)) => {
            eprintln!("invalid configuration: {msg}");
            ExitCode::from(2)
        }
        Err(Failed::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
