use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::jacobian;
use crate::solver::{Scenario, SolverConfig, Stepper};
use crate::VectorField;

/// Outcome of one member of an ε-family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub eps: f64,
    pub steps: usize,
    pub max_iterations: usize,
    pub error: Option<String>,
}

/// Distance between consecutive members `ε_i`, `ε_{i+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDifference {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    /// `‖v^{ε_i} − v^{ε_{i+1}}‖_{L₂(0,T;H¹)}`
    pub l2_h1: f64,
    /// `‖v^{ε_i} − v^{ε_{i+1}}‖_{L_∞(0,T;L₂)}`
    pub linf_l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub members: Vec<MemberSummary>,
    pub differences: Vec<PairDifference>,
    /// Some member failed; differences cover only completed pairs.
    pub partial: bool,
    /// `l2_h1` strictly decreasing along the list.
    pub monotone: bool,
}

struct Member {
    summary: MemberSummary,
    times: Vec<f64>,
    samples: Vec<VectorField>,
}

fn run_member(scenario: &Scenario, cfg: &SolverConfig, eps: f64, every: usize) -> Member {
    let mut times = Vec::new();
    let mut samples = Vec::new();
    let mut summary = MemberSummary { eps, steps: 0, max_iterations: 0, error: None };
    let cfg = SolverConfig { eps_floor: eps, ..cfg.clone() };
    let outcome = (|| -> Result<()> {
        let mut state = scenario.initial_state(cfg.n)?;
        state.rho = state.rho.map(|r| r.max(eps));
        let mut stepper = Stepper::new(cfg.clone())?;
        let steps = cfg.steps();
        times.push(state.t);
        samples.push(state.v.clone());
        for k in 1..=steps {
            let (next, report) = stepper.step(&state)?;
            state = next;
            summary.steps = k;
            summary.max_iterations = summary.max_iterations.max(report.iterations);
            if k % every == 0 || k == steps {
                times.push(state.t);
                samples.push(state.v.clone());
            }
        }
        Ok(())
    })();
    summary.error = outcome.err().map(|e| e.to_string());
    Member { summary, times, samples }
}

fn h1_sq(w: &VectorField) -> f64 {
    w.dot(w) + jacobian(w).iter().map(|g| g.dot(g)).sum::<f64>()
}

fn compare(a: &Member, b: &Member) -> Option<PairDifference> {
    if a.summary.error.is_some() || b.summary.error.is_some() || a.times != b.times {
        return None;
    }
    let diffs: Vec<VectorField> = a.samples.iter().zip(&b.samples).map(|(x, y)| x - y).collect();
    let h1: Vec<f64> = diffs.iter().map(h1_sq).collect();
    let l2_h1 =
        a.times.windows(2).zip(h1.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum::<f64>().sqrt();
    let linf_l2 = diffs.iter().map(VectorField::l2_norm).fold(0.0, f64::max);
    Some(PairDifference { eps_coarse: a.summary.eps, eps_fine: b.summary.eps, l2_h1, linf_l2 })
}

/// Runs `scenario` with `ρ₀ ← max(ρ₀, ε)` and floor `ε` for every `ε` in
/// `eps_list`, concurrently, and measures consecutive differences from
/// velocity samples taken every `sample_every` steps.
pub fn epsilon_continuation(
    scenario: &Scenario,
    cfg: &SolverConfig,
    eps_list: &[f64],
    sample_every: usize,
) -> Result<ConvergenceReport> {
    if eps_list.iter().any(|&e| !(e > 0.0 && e <= cfg.rho_star)) {
        return Err(Error::Domain("every ε must lie in (0, rho_star]".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("ε list must be strictly decreasing".into()));
    }
    let every = sample_every.max(1);
    let members: Vec<Member> = std::thread::scope(|s| {
        let handles: Vec<_> =
            eps_list.iter().map(|&eps| s.spawn(move || run_member(scenario, cfg, eps, every))).collect();
        handles.into_iter().map(|h| h.join().expect("continuation member panicked")).collect()
    });
    let differences: Vec<PairDifference> = members.windows(2).filter_map(|w| compare(&w[0], &w[1])).collect();
    let partial = members.iter().any(|m| m.summary.error.is_some());
    let monotone = differences.windows(2).all(|w| w[1].l2_h1 < w[0].l2_h1);
    Ok(ConvergenceReport {
        scenario: scenario.name().into(),
        members: members.into_iter().map(|m| m.summary).collect(),
        differences,
        partial,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(n: usize) -> SolverConfig {
        SolverConfig { n, dt: 2e-3, t_end: 0.02, ..Default::default() }
    }

    #[test]
    fn floor_is_irrelevant_above_it() {
        let sc = Scenario::TaylorGreen { amplitude: 1.0 };
        let r = epsilon_continuation(&sc, &short(16), &[1e-2, 1e-3, 1e-4], 2).unwrap();
        assert_eq!(r.differences.len(), 2);
        assert!(r.differences.iter().all(|d| d.l2_h1 < 1e-10 && d.linf_l2 < 1e-10));
        assert!(!r.partial);
    }

    #[test]
    fn single_member_gives_no_comparisons() {
        let r = epsilon_continuation(&Scenario::default(), &short(16), &[1e-2], 1).unwrap();
        assert!(r.differences.is_empty());
        assert_eq!(r.members.len(), 1);
        assert!(r.monotone && !r.partial);
    }

    #[test]
    fn list_must_decrease() {
        assert!(epsilon_continuation(&Scenario::default(), &short(16), &[1e-3, 1e-2], 1).is_err());
        assert!(epsilon_continuation(&Scenario::default(), &short(16), &[0.0], 1).is_err());
    }

    #[test]
    fn failing_member_flags_the_report() {
        let cfg = SolverConfig { inner_maxit: 1, ..short(16) };
        let r = epsilon_continuation(&Scenario::default(), &cfg, &[1e-2, 1e-3], 1).unwrap();
        assert!(r.partial);
        assert!(r.differences.is_empty());
        assert!(r.members.iter().all(|m| m.error.is_some()));
    }
}
