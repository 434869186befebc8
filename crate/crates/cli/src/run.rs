//! The `run` verb: one solver trajectory with diagnostics, snapshots and boundary tracking.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Result;
use ins_core::diagnostics::{
    apriori_functionals, energy_residual, AprioriReport, DiagnosticsRecord, DiagnosticsSettings, Tracker,
};
use ins_core::inequalities::{fractional_time_norm, FractionalNorm};
use ins_core::lagrangian::{BoundaryCurve, BoundaryTracker, HolderSample, VelocitySlice};
use ins_core::solver::{FluidState, StepReport, Stepper};
use ins_core::VectorField;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::artifacts::{sha256_hex, versions, Artifacts, GridInfo, Manifest};
use crate::config::ScenarioConfig;

/// A named pass/fail assertion of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Why a run stopped early.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub step: usize,
    pub t: f64,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub steps_completed: usize,
    pub steps_planned: usize,
    pub max_energy_residual: Option<f64>,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub apriori: Option<AprioriReport>,
    pub fractional: Vec<FractionalNorm>,
    pub checks: Vec<Check>,
}

pub struct RunOutcome {
    pub manifest: Manifest,
    pub summary: RunSummary,
    pub failure: Option<Failure>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }
}

const CSV_HEADER: &str = "t,kinetic_energy,cumulative_dissipation,energy_residual,total_mass,momentum_x,momentum_y,\
rho_min,rho_max,grad_v_l2,sqrho_vt_l2,hess_v_l2,grad_p_l2,cfl,iterations,inner_residual";

fn csv_row(out: &mut String, rec: &DiagnosticsRecord, e0: f64, report: Option<&StepReport>) {
    let residual =
        (rec.kinetic_energy + rec.cumulative_dissipation - e0).abs() / e0.max(ins_core::diagnostics::ENERGY_FLOOR);
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    let _ = write!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        rec.t,
        rec.kinetic_energy,
        rec.cumulative_dissipation,
        residual,
        rec.total_mass,
        rec.total_momentum[0],
        rec.total_momentum[1],
        rec.rho_min,
        rec.rho_max,
        rec.grad_v_l2,
        opt(rec.sqrho_vt_l2),
        rec.hess_v_l2,
        rec.grad_p_l2,
    );
    match report {
        Some(r) => {
            let _ = writeln!(out, ",{},{},{}", r.cfl, r.iterations, r.residual);
        }
        None => out.push_str(",,,\n"),
    }
}

fn holder_csv(series: &[HolderSample]) -> String {
    let mut out = String::from("t,seminorm,spacing_ratio,length\n");
    for s in series {
        let _ = writeln!(out, "{},{},{},{}", s.t, s.seminorm, s.spacing_ratio, s.length);
    }
    out
}

fn markers_csv(curve: &BoundaryCurve) -> String {
    let mut out = String::from("x,y\n");
    for [x, y] in &curve.points {
        let _ = writeln!(out, "{x},{y}");
    }
    out
}

fn snapshot(art: &mut Artifacts, name: &str, step: usize, s: &FluidState) -> Result<()> {
    let comps = [s.rho.clone(), s.v.component(0).clone(), s.v.component(1).clone(), s.p.clone()];
    art.write_snapshot(&format!("snapshots/step_{step:06}.snap"), name, s.t, &comps)
}

/// Patch boundary markers advected between consecutive velocity fields.
struct Boundary {
    tracker: BoundaryTracker,
    prev: VelocitySlice,
    every: usize,
    error: Option<String>,
}

impl Boundary {
    fn advance(&mut self, step: usize, s: &FluidState) {
        if self.error.is_some() {
            return;
        }
        let result = VelocitySlice::new(s.t, &s.v, false).and_then(|next| {
            self.tracker.advance(&self.prev, &next)?;
            self.prev = next;
            if step.is_multiple_of(self.every) {
                self.tracker.sample()?;
            }
            Ok(())
        });
        if let Err(e) = result {
            warn!("boundary tracking stopped at t = {}: {e}", s.t);
            self.error = Some(format!("t = {}: {e}", s.t));
        }
    }
}

/// Runs `cfg` and writes every artifact under `out`, including partial results when
/// the solver fails. Assertions: the run completes, the density stays in `[0, ρ*]`,
/// boundary tracking succeeds, and the fractional time-regularity bound holds.
pub fn run_scenario(cfg: &ScenarioConfig, out: &std::path::Path) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut art = Artifacts::create(out)?;
    let emitted = cfg.emit();
    art.write("config.toml", emitted.as_bytes())?;

    let solver = &cfg.solver;
    let name = cfg.scenario.name();
    let mut state = cfg.scenario.initial_state(solver.n)?;
    let mut stepper = Stepper::new(solver.clone())?;
    let d = &cfg.diagnostics;
    let mut tracker = Tracker::new(DiagnosticsSettings {
        mu: solver.mu,
        eps_floor: solver.eps_floor,
        rho_star: solver.rho_star,
        p_list: d.p_list.clone(),
        r_list: d.r_list.clone(),
    })?;
    let e0 = tracker.observe(&state)?.kinetic_energy;
    // ∫ρ̃₀|v₀|, the scale of momentum drift when the initial momentum vanishes.
    let speed = state.v.component(0).zip_map(state.v.component(1), |a, b| a.hypot(b));
    let momentum_scale = state.rho.map(|r| r.max(solver.eps_floor)).zip_map(&speed, |r, s| r * s).integral();
    let mut csv = format!("{CSV_HEADER}\n");
    csv_row(&mut csv, tracker.records().last().expect("observed"), e0, None);
    snapshot(&mut art, name, 0, &state)?;

    let mut boundary = match cfg.scenario.patch() {
        Some(patch) if cfg.boundary.markers > 0 => {
            let curve = BoundaryCurve::circle(patch.center, patch.radius, cfg.boundary.markers);
            let mut tracker = BoundaryTracker::new(curve, 0.0, cfg.boundary.alpha)?;
            tracker.sample()?;
            Some(Boundary {
                tracker,
                prev: VelocitySlice::new(0.0, &state.v, false)?,
                every: cfg.boundary.sample_every,
                error: None,
            })
        }
        _ => None,
    };

    let mut velocity_samples: Vec<VectorField> = vec![state.v.clone()];
    let mut density_in_range = true;
    let steps = solver.steps();
    let mut completed = 0;
    let mut failure = None;
    let log_every = (steps / 10).max(1);
    for k in 1..=steps {
        let (next, report) = match stepper.step(&state) {
            Ok(x) => x,
            Err(e) => {
                warn!("step {k} failed: {e}");
                failure = Some(Failure { step: k, t: state.t + solver.dt, error: e.to_string() });
                break;
            }
        };
        state = next;
        completed = k;
        let rec = tracker.observe(&state)?;
        density_in_range &= rec.rho_min >= 0.0 && rec.rho_max <= solver.rho_star;
        csv_row(&mut csv, rec, e0, Some(&report));
        if (cfg.output.snapshot_every > 0 && k.is_multiple_of(cfg.output.snapshot_every)) || k == steps {
            snapshot(&mut art, name, k, &state)?;
        }
        if let Some(b) = boundary.as_mut() {
            b.advance(k, &state);
        }
        if k.is_multiple_of(d.fractional_every) {
            velocity_samples.push(state.v.clone());
        }
        if k.is_multiple_of(log_every) {
            info!("step {k}/{steps} t = {:.4} cfl {:.3} inner iterations {}", state.t, report.cfl, report.iterations);
        }
    }
    if failure.is_some() && completed > 0 {
        snapshot(&mut art, name, completed, &state)?;
    }
    let solve_seconds = start.elapsed().as_secs_f64();

    let trajectory = tracker.finish();
    art.write("diagnostics.csv", csv.as_bytes())?;
    let max_energy_residual = energy_residual(&trajectory).ok().map(|r| r.into_iter().fold(0.0, f64::max));
    let apriori = apriori_functionals(&trajectory, &d.shift).ok();

    let mut checks = vec![
        Check { name: "completed".into(), passed: failure.is_none(), detail: format!("{completed} of {steps} steps") },
        Check {
            name: "density_range".into(),
            passed: density_in_range,
            detail: format!("0 ≤ ρ ≤ {} at every step", solver.rho_star),
        },
    ];

    let mut fractional = Vec::new();
    if velocity_samples.len() >= 3 {
        let spacing = solver.dt * d.fractional_every as f64;
        for &alpha in &d.alphas {
            let f = fractional_time_norm(&velocity_samples, spacing, alpha, d.fractional_p)?;
            checks.push(Check {
                name: format!("fractional_alpha_{alpha}"),
                passed: f.holds(),
                detail: format!("{:.6e} ≤ {:.6e} (C = {:.6})", f.norm_sq, f.bound_rhs, f.c_alpha_t),
            });
            fractional.push(f);
        }
    }

    if let Some(b) = &boundary {
        art.write("boundary.csv", holder_csv(b.tracker.series()).as_bytes())?;
        art.write("boundary_markers.csv", markers_csv(&b.tracker.curve()).as_bytes())?;
        let series = b.tracker.series();
        let growth = match (series.first(), series.last()) {
            (Some(a), Some(z)) if a.seminorm > 0.0 => z.seminorm / a.seminorm,
            _ => f64::NAN,
        };
        checks.push(Check {
            name: "boundary_tracking".into(),
            passed: b.error.is_none(),
            detail: b.error.clone().unwrap_or_else(|| format!("seminorm grew by {growth:.4}×")),
        });
    }

    let summary = RunSummary {
        scenario: name.to_owned(),
        steps_completed: completed,
        steps_planned: steps,
        max_energy_residual,
        mass_drift: trajectory.mass_drift(),
        momentum_drift: trajectory.momentum_drift(momentum_scale),
        apriori,
        fractional,
        checks,
    };
    art.write_json("apriori.json", &summary)?;
    if let Some(f) = &failure {
        art.write_json("failure.json", f)?;
    }

    let passed = summary.checks.iter().all(|c| c.passed);
    let manifest = Manifest {
        verb: "run".into(),
        scenario: name.to_owned(),
        config_sha256: sha256_hex(emitted.as_bytes()),
        versions: versions(),
        grids: vec![GridInfo { n: solver.n, d: 2 }],
        passed,
        timings: [("solve".to_owned(), solve_seconds), ("total".to_owned(), start.elapsed().as_secs_f64())].into(),
        artifacts: vec![],
    };
    let manifest = art.finish(manifest)?;
    Ok(RunOutcome { manifest, summary, failure })
}
