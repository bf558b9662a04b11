//! Property tests of the model invariants.

use cellcov::coverage::{eta, rate_to_sir_threshold, KernelScale};
use cellcov::metadist::mnatsakanov_cdf;
use cellcov::moments::{eta_m, MomentOrder, MomentSequence};
use cellcov::numerics::{
    golden_section_max, integrate_semi_infinite, OptimizerSpec, QuadratureSpec,
};
use cellcov::propagation::{
    db_to_linear, linear_to_db, los_probability, nlos_probability, path_gain, pathloss_db,
    Deployment, Environment, LinkType,
};
use proptest::prelude::*;

fn umi() -> Environment {
    Environment::preset(Deployment::UMi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn los_plus_nlos_is_exactly_one(
        h in 0.0..500.0f64,
        r in 1e-3..1e5f64,
    ) {
        let env = umi();
        let pl = los_probability(h, r, &env).unwrap();
        let pnl = nlos_probability(h, r, &env).unwrap();
        prop_assert!((0.0..=1.0).contains(&pl));
        prop_assert_eq!(pl + pnl, 1.0);
    }

    #[test]
    fn los_probability_monotone(
        h in 0.1..300.0f64,
        r in 0.1..1e4f64,
        bump in 1.01..4.0f64,
    ) {
        let env = umi();
        let base = los_probability(h, r, &env).unwrap();
        prop_assert!(los_probability(h * bump, r, &env).unwrap() > base);
        prop_assert!(los_probability(h, r * bump, &env).unwrap() < base);
    }

    #[test]
    fn pathloss_monotone_and_gain_positive(
        h in 0.0..200.0f64,
        r in 1.0..1e4f64,
        bump in 1.01..4.0f64,
        link in prop_oneof![Just(LinkType::Los), Just(LinkType::Nlos)],
    ) {
        let env = umi();
        let near = pathloss_db(h, r, link, &env, 2.0).unwrap();
        let far = pathloss_db(h, r * bump, link, &env, 2.0).unwrap();
        prop_assert!(far > near);
        let g = path_gain(h, r, link, &env, 2.0).unwrap();
        prop_assert!(g > 0.0);
        prop_assert!(path_gain(h, r * bump, link, &env, 2.0).unwrap() < g);
    }

    #[test]
    fn db_round_trip_is_tight(x in 1e-12..1e12f64) {
        let back = db_to_linear(linear_to_db(x));
        prop_assert!(((back - x) / x).abs() < 1e-12);
    }

    #[test]
    fn rate_threshold_positive_and_monotone(
        r_o in 1e3..1e8f64,
        n_s in 1u32..30,
        w in 1e6..1e8f64,
    ) {
        // Stay inside the physical-configuration guard.
        prop_assume!(r_o * 1.5 * n_s as f64 / w <= 1000.0);
        let t = rate_to_sir_threshold(r_o, n_s, w).unwrap();
        prop_assert!(t > 0.0);
        let t_higher = rate_to_sir_threshold(r_o * 1.5, n_s, w).unwrap();
        prop_assert!(t_higher > t);
    }

    #[test]
    fn eta_lives_in_unit_interval(
        s in 0.0..1e12f64,
        r in 0.5..1e4f64,
        h in 0.0..200.0f64,
    ) {
        let v = eta(KernelScale::new(s).unwrap(), r, h, &umi(), 2.0).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0, "eta = {}", v);
    }

    #[test]
    fn eta_m_bounded_for_all_orders(
        s in 0.0..1e10f64,
        r in 0.5..1e4f64,
        h in 0.0..200.0f64,
        m in 0.0..60.0f64,
        t in -300.0..300.0f64,
    ) {
        let env = umi();
        let scale = KernelScale::new(s).unwrap();
        let real = eta_m(scale, r, MomentOrder::Real(m), h, &env, 2.0).unwrap();
        prop_assert_eq!(real.im, 0.0);
        prop_assert!(real.re > 0.0 && real.re <= 1.0 + 1e-15);
        let complex = eta_m(scale, r, MomentOrder::Imaginary(t), h, &env, 2.0).unwrap();
        prop_assert!(complex.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn exponential_integrals_match_closed_form(rate in 0.05..50.0f64) {
        let spec = QuadratureSpec::default();
        let out = integrate_semi_infinite(|r: f64| (-rate * r).exp(), 0.0, &spec).unwrap();
        let exact = 1.0 / rate;
        prop_assert!(((out.value - exact) / exact).abs() < 1e-6);
        prop_assert!((out.value - exact).abs() <= out.error_estimate.max(1e-9 * exact));
    }

    #[test]
    fn golden_section_finds_random_quadratic_peak(
        center in -5.0..15.0f64,
        scale in 0.1..50.0f64,
        offset in -10.0..10.0f64,
    ) {
        let spec = OptimizerSpec { bracket: (-10.0, 20.0), x_tol: 1e-6, max_evals: 500 };
        let out = golden_section_max(
            |x| -scale * (x - center) * (x - center) + offset,
            &spec,
        ).unwrap();
        prop_assert!((out.argmax - center).abs() < 1e-5);
    }

    #[test]
    fn mnatsakanov_point_masses_exact_for_any_order(mu in 1u32..=50) {
        let metric = cellcov::coverage::Metric::SirThreshold(1.0);
        let ones = MomentSequence::from_values(metric, 0, vec![1.0; mu as usize + 1]).unwrap();
        let mut zeros_raw = vec![0.0; mu as usize + 1];
        zeros_raw[0] = 1.0;
        let zeros = MomentSequence::from_values(metric, 0, zeros_raw).unwrap();
        for x in [0.12, 0.5, 0.93] {
            prop_assert_eq!(mnatsakanov_cdf(&ones, x).unwrap(), 0.0);
            prop_assert_eq!(mnatsakanov_cdf(&zeros, x).unwrap(), 1.0);
        }
    }

    #[test]
    fn mnatsakanov_cdf_nondecreasing_for_geometric_moments(
        p in 0.05..0.95f64,
        mu in 2u32..=25,
    ) {
        // M_j = p^j are the moments of a point mass at p; the reconstruction
        // is then a binomial CDF, nondecreasing in exact arithmetic. The
        // slack covers the float cancellation of (1-p)^(mu-k) computed from
        // alternating terms of magnitude up to ~1e5. Beyond mu ~ 30 the
        // cancellation grows past 1e-3 for interior point masses, which is
        // what the order cap and roundoff diagnostic exist for.
        let values: Vec<f64> = (0..=mu).map(|j| p.powi(j as i32)).collect();
        let metric = cellcov::coverage::Metric::SirThreshold(1.0);
        let seq = MomentSequence::from_values(metric, 0, values).unwrap();
        let mut prev = f64::MIN;
        for i in 1..20 {
            let x = i as f64 / 20.0;
            let s = mnatsakanov_cdf(&seq, x).unwrap();
            prop_assert!(s >= prev - 1e-4, "CDF must be nondecreasing: {} after {}", s, prev);
            prev = s;
        }
    }
}
