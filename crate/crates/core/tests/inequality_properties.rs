use ins_core::fields::Grid;
use ins_core::inequalities::{
    desjardins_check, fractional_time_norm, ladyzhenskaya_ratio, sample_random_field, truncation_bounds,
    weighted_poincare_check, FieldEnsemble,
};
use proptest::prelude::*;

fn ensemble() -> FieldEnsemble {
    FieldEnsemble { count: 1 << 20, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ladyzhenskaya_is_homogeneous(index in 0usize..1000, lambda in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64]) {
        let (_, mut z) = sample_random_field(&ensemble(), Grid::square(32), index).unwrap();
        z.subtract_mean();
        let r = ladyzhenskaya_ratio(&z).unwrap();
        let scaled = ladyzhenskaya_ratio(&z.map(|v| lambda * v)).unwrap();
        prop_assert!((r - scaled).abs() <= 1e-12 * r);
    }

    #[test]
    fn desjardins_fit_is_scale_invariant(index in 0usize..1000) {
        let (rho, z) = sample_random_field(&ensemble(), Grid::square(32), index).unwrap();
        let d = desjardins_check(&rho, &z, 1.0).unwrap();
        let d10 = desjardins_check(&rho, &z.map(|v| 10.0 * v), 1.0).unwrap();
        prop_assert!((d.ratio - d10.ratio).abs() < 1e-10);
        prop_assert!((d.core_ratio - d10.core_ratio).abs() < 1e-10);
    }

    #[test]
    fn explicit_constant_bounds_hold(index in 0usize..100_000, level in 2usize..12) {
        let (a, z) = sample_random_field(&ensemble(), Grid::square(32), index).unwrap();
        prop_assert!(weighted_poincare_check(&a, &z).unwrap().holds());
        let t = truncation_bounds(&z, level).unwrap();
        prop_assert!(t.linf_low <= t.sqrtlog_bound && t.tail_hhalf <= t.tail_bound);
    }

    #[test]
    fn fractional_norm_weakens_as_alpha_grows(
        series in prop::collection::vec(-3.0..3.0f64, 3..60),
        a1 in 0.01..0.49f64,
        a2 in 0.01..0.49f64,
    ) {
        // T ≤ 1, so h^{2α−2} decreases with α on every increment.
        let dt = 1.0 / (series.len() - 1) as f64;
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let strong = fractional_time_norm(&series, dt, lo, 2.0).unwrap();
        let weak = fractional_time_norm(&series, dt, hi, 2.0).unwrap();
        prop_assert!(weak.norm_sq <= strong.norm_sq * (1.0 + 1e-12));
    }
}
