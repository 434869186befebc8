use ins_core::diagnostics::{
    apriori_functionals, energy_residual, DiagnosticsSettings, ShiftTriple, Tracker, Trajectory,
};
use ins_core::solver::{Scenario, SolverConfig, Stepper};
use std::f64::consts::PI;

fn tracked(scenario: &Scenario, cfg: &SolverConfig) -> Trajectory {
    let settings =
        DiagnosticsSettings { mu: cfg.mu, eps_floor: cfg.eps_floor, rho_star: cfg.rho_star, ..Default::default() };
    let mut tracker = Tracker::new(settings).unwrap();
    let s0 = scenario.initial_state(cfg.n).unwrap();
    tracker.observe(&s0).unwrap();
    Stepper::new(cfg.clone()).unwrap().run(s0, |s, _| tracker.observe(s).map(|_| ())).unwrap();
    tracker.finish()
}

#[test]
fn taylor_green_h1_functional_matches_closed_form() {
    // The discrete pressure lags by one step, an O(dt) error in ∫‖∇P‖².
    let cfg = SolverConfig { n: 32, dt: 2.5e-4, t_end: 0.1, ..Default::default() };
    let traj = tracked(&Scenario::TaylorGreen { amplitude: 1.0 }, &cfg);
    let rep = apriori_functionals(&traj, &[ShiftTriple { p: 4.0, r: 2.0, s: 1.0 }]).unwrap();

    let mu = cfg.mu;
    let lam = 16.0 * PI * PI * mu;
    // ‖∇v‖² = 4π²e^{−λt}, ‖√ρv_t‖² + μ²‖∇²v‖² = 64π⁴μ²e^{−λt}, ‖∇P‖² = π²e^{−2λt}
    let exact = |t: f64| {
        4.0 * PI * PI * (-lam * t).exp()
            + (64.0 * PI.powi(4) * mu * mu * (1.0 - (-lam * t).exp()) / lam
                + PI * PI * (1.0 - (-2.0 * lam * t).exp()) / (2.0 * lam))
                / (2.0 * mu)
    };
    for (t, h1) in rep.t.iter().zip(&rep.h1_lhs) {
        let want = exact(*t);
        assert!((h1 - want).abs() < 1e-3 * want, "t = {t}: {h1} vs {want}");
    }
    assert!(rep.fitted_c0 > 0.0 && rep.fitted_c0.is_finite());
    assert!(rep.h1_lhs.iter().zip(&rep.gronwall_rhs).all(|(l, r)| l <= &(r * (1.0 + 1e-12))));
}

#[test]
fn taylor_green_energy_residual_is_small() {
    let cfg = SolverConfig { n: 32, dt: 1e-3, t_end: 0.1, ..Default::default() };
    let traj = tracked(&Scenario::TaylorGreen { amplitude: 1.0 }, &cfg);
    let res = energy_residual(&traj).unwrap();
    assert!(res.iter().copied().fold(0.0, f64::max) < 1e-3);
    assert!(traj.mass_drift() < 1e-14);
    assert!(traj.momentum_drift(1.0) < 1e-12);
}

#[test]
fn rest_residual_is_identically_zero() {
    let cfg = SolverConfig { n: 16, dt: 1e-2, t_end: 0.05, ..Default::default() };
    let traj = tracked(&Scenario::Rest { patch: Default::default() }, &cfg);
    assert!(energy_residual(&traj).unwrap().iter().all(|&r| r == 0.0));
}

#[test]
fn drop_density_range_is_constant_along_the_trajectory() {
    let cfg = SolverConfig { n: 32, dt: 2e-3, t_end: 0.05, ..Default::default() };
    let traj = tracked(&Scenario::default(), &cfg);
    assert!(traj.records.iter().all(|r| r.rho_min == 0.0 && r.rho_max == 1.0));
    assert!(traj.records.iter().all(|r| r.kinetic_energy >= 0.0 && r.total_momentum.iter().all(|p| p.is_finite())));
}

#[test]
fn fitted_constant_is_stable_under_refinement() {
    let fit = |sc: &Scenario, n: usize| {
        let cfg = SolverConfig { n, dt: 2e-3, t_end: 0.1, ..Default::default() };
        let traj = tracked(sc, &cfg);
        apriori_functionals(&traj, &[]).unwrap().fitted_c0
    };
    // Weak flows decay viscously below ‖∇v₀‖² and fit C₀ = 0; this one is nonlinear enough.
    let sc = Scenario::Random { seed: 3, amplitude: 4.0 };
    let (coarse, fine) = (fit(&sc, 32), fit(&sc, 64));
    assert!(coarse > 0.0 && fine.is_finite());
    let ratio = fine / coarse;
    assert!((0.5..=1.5).contains(&ratio), "C0 {coarse} → {fine}");
}
