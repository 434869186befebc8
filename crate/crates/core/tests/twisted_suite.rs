use ins_core::fields::{divergence, Grid};
use ins_core::lagrangian::{integrate_flow, lagrangian_ops, FlowIntegrator, MatrixField, VelocitySlice};
use ins_core::twisted_div::{
    adversarial_coefficient, composed_shear, contraction_estimate, solve_twisted, Outcome, TwistedProblem,
};
use ins_core::{Error, VectorField};
use proptest::prelude::*;
use std::f64::consts::PI;

fn source(grid: Grid, seed: u64) -> VectorField {
    let s = seed as f64;
    VectorField::from_fn(grid, |x: [f64; 3]| {
        [
            (2.0 * PI * (x[0] + 0.1 * s)).sin() * (4.0 * PI * x[1]).cos(),
            (2.0 * PI * (2.0 * x[0] - x[1] + 0.3 * s)).cos(),
            0.0,
        ]
    })
}

fn series(grid: Grid, q: f64, slices: usize, seed: u64) -> TwistedProblem {
    let times: Vec<f64> = (0..slices).map(|k| 0.05 * k as f64).collect();
    let a = times.iter().map(|&t| composed_shear(grid, q, t)).collect();
    let r = times.iter().map(|&t| source(grid, seed + (10.0 * t) as u64)).collect();
    TwistedProblem::new(times, a, r, 1e-12).unwrap()
}

#[test]
fn small_synthetic_coefficients_converge_with_small_residual() {
    let grid = Grid::square(64);
    for seed in 0..4 {
        let p = series(grid, 0.1, 5, seed);
        assert!(p.smallness().id_minus_a_entry <= 0.1 + 1e-12);
        let sol = solve_twisted(&p, 200).unwrap();
        assert!(sol.converged);
        for (k, s) in sol.slices.iter().enumerate() {
            // Independent check through the product-first divergence.
            let div_aw = lagrangian_ops(&p.a[k], &sol.w[k]).unwrap().div_az;
            let residual = (&div_aw - &divergence(&p.r[k])).l2_norm();
            assert!(residual < 1e-8, "residual {residual}");
            assert!(s.measured_factor.unwrap() < 1.0);
        }
        let est = contraction_estimate(&p, 6, seed).unwrap();
        assert!(est < 1.0, "contraction estimate {est}");
    }
}

#[test]
fn coefficients_from_a_flow_map_converge() {
    let grid = Grid::square(64);
    let v = VectorField::from_fn(grid, |x: [f64; 3]| {
        let (sx, cx, sy, cy) =
            ((2.0 * PI * x[0]).sin(), (2.0 * PI * x[0]).cos(), (2.0 * PI * x[1]).sin(), (2.0 * PI * x[1]).cos());
        [0.3 * sx * cy, -0.3 * cx * sy, 0.0]
    });
    let labels = FlowIntegrator::on_grid(grid, 0.0, true).unwrap().labels().to_vec();
    let (mut times, mut a) = (vec![], vec![]);
    for k in 1..=4 {
        let t = 0.0125 * k as f64;
        let slices: Vec<_> = (0..=k).map(|j| VelocitySlice::new(0.0125 * j as f64, &v, true).unwrap()).collect();
        let map = integrate_flow(&slices, labels.clone(), true).unwrap().flow_map(grid).unwrap();
        times.push(t);
        a.push(map.grad_x.unwrap().inverse().unwrap());
    }
    let r = times.iter().map(|_| source(grid, 1)).collect();
    let p = TwistedProblem::new(times, a, r, 1e-12).unwrap();
    let small = p.smallness();
    eprintln!("flow-map coefficient: {small:?}");
    assert!(small.id_minus_a_entry <= 0.1 && small.det_deviation < 1e-8);
    let sol = solve_twisted(&p, 200).unwrap();
    assert!(sol.converged && sol.slices.iter().all(|s| s.residual < 1e-8));
    assert!(sol.w_t_l43_l32.is_finite());
}

#[test]
fn adversarial_coefficients_are_classified() {
    let grid = Grid::square(32);
    for q in [0.8, 0.9] {
        let a = adversarial_coefficient(grid, q);
        let p = TwistedProblem::new(vec![0.0], vec![a], vec![source(grid, 2)], 1e-12).unwrap();
        assert!((p.smallness().id_minus_a_entry - q).abs() < 1e-12);
        match solve_twisted(&p, 500) {
            Err(Error::Diverged { factor, .. }) => assert!(factor > 1.0),
            other => panic!("q = {q}: expected divergence, got {:?}", other.map(|s| s.converged)),
        }
    }
    // Same entry size, but a nilpotent Id − A: still a contraction in L₂.
    let shear = MatrixField::from_fn(grid, |x| [[1.0, 0.9 * (2.0 * PI * x[1]).cos()], [0.0, 1.0]]);
    let p = TwistedProblem::new(vec![0.0], vec![shear], vec![source(grid, 2)], 1e-12).unwrap();
    let sol = solve_twisted(&p, 2000).unwrap();
    assert_eq!(sol.slices[0].outcome, Outcome::Converged);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solution_is_linear_in_the_source(s1 in 0u64..50, s2 in 0u64..50, q in 0.0..0.2f64, phase in 0.0..1.0f64) {
        let grid = Grid::square(32);
        let a = composed_shear(grid, q, phase);
        let (r1, r2) = (source(grid, s1), source(grid, s2));
        let solve = |r: VectorField| {
            let p = TwistedProblem::new(vec![0.0], vec![a.clone()], vec![r], 1e-13).unwrap();
            solve_twisted(&p, 300).unwrap().w.remove(0)
        };
        let (w1, w2, w12) = (solve(r1.clone()), solve(r2.clone()), solve(&r1 + &r2));
        let err = (&w12 - &(&w1 + &w2)).l2_norm();
        prop_assert!(err <= 1e-10 * w12.l2_norm().max(1.0), "{err}");
    }
}
