use proptest::prelude::*;
use sck_core::model::cost::RunningCost;
use sck_core::model::resolvent::Resolvent;
use sck_core::sde::{estimate_cost, BandPolicy, SimConfig};
use sck_core::thresholds::ThresholdOptions;
use sck_core::valuefn::{Branch, NashValue, PiecewiseValue};

fn value(a: f64, sigma: f64, rho: f64, k: f64) -> PiecewiseValue {
    let res = Resolvent::new(RunningCost::quadratic(a, 0.0, 0.0).unwrap(), sigma, rho).unwrap();
    PiecewiseValue::solve(res, k, &ThresholdOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convex_even_and_gradient_bounded(a in 0.2f64..4.0, s in 0.3f64..2.5, rho in 0.3f64..2.0, k in 0.1f64..2.0) {
        let pv = value(a, s, rho, k);
        let c = pv.threshold();
        let h = 0.01 * c.max(0.1);
        for i in -400..=400 {
            let x = i as f64 * 4.0 * c / 400.0;
            let second = pv.value(x + h) - 2.0 * pv.value(x) + pv.value(x - h);
            prop_assert!(second >= -1e-12 * pv.value(x).abs().max(1.0));
            // The threshold residual tolerance 1e-12 moves v'(c) by up to 1e-12·p''.
            prop_assert!(pv.eval(x).dv.abs() <= k + 1e-12 * (2.0 * a / rho) + 1e-15);
            prop_assert!((pv.value(x) - pv.value(-x)).abs() <= 1e-12 * pv.value(x).abs().max(1.0));
        }
    }

    #[test]
    fn pastes_smoothly_and_satisfies_complementarity(a in 0.2f64..4.0, s in 0.3f64..2.5, k in 0.1f64..2.0) {
        let pv = value(a, s, 1.0, k);
        let c = pv.threshold();
        let inner = pv.eval(c * (1.0 - 1e-12));
        let outer = pv.eval(c * (1.0 + 1e-12));
        prop_assert!((inner.dv - outer.dv).abs() < 1e-8);
        prop_assert!(inner.d2v.abs() < 1e-6 * a.max(1.0));
        for i in 0..200 {
            let x = -3.0 * c + 6.0 * c * i as f64 / 199.0;
            let r = pv.hjb_residual(x);
            let tol = 1e-9 * (1.0 + pv.value(x).abs());
            prop_assert!(r.interior.abs().min(r.gradient.abs()) < tol);
            prop_assert!(r.interior <= tol && r.gradient <= tol);
        }
    }
}

#[test]
fn branches_are_labelled_by_side() {
    let pv = value(1.0, 1.0, 1.0, 0.5);
    let c = pv.threshold();
    assert_eq!(pv.eval(0.0).branch, Branch::Interior);
    assert_eq!(pv.eval(c + 0.1).branch, Branch::Upper);
    assert_eq!(pv.eval(-c - 0.1).branch, Branch::Lower);
}

#[test]
fn nash_profile_is_frozen_below_the_band() {
    let res = Resolvent::new(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap(), 1.0, 1.0).unwrap();
    let nash = NashValue::solve(res, 1.0, &ThresholdOptions::default()).unwrap();
    let c2 = nash.threshold();
    assert!((c2 - 1.155_194_976_722_150_5).abs() < 1e-11);
    let f = |z: f64| nash.profile(z).v;
    assert_eq!(f(-c2 - 0.5), f(-c2 - 3.0));
    assert!((f(c2 + 1.0) - f(c2) - 1.0).abs() < 1e-12);
    let (v1, v2) = nash.eval(0.3, 0.1);
    assert_eq!(v1, f(0.2));
    assert_eq!(v2, f(-0.2));
}

#[test]
fn simulated_cost_matches_value_off_center() {
    let pv = value(1.0, 1.0, 1.0, 0.5);
    let policy = BandPolicy {
        c: pv.threshold(),
        sigma: 1.0,
        rho: 1.0,
        k_plus: 0.5,
        k_minus: 0.5,
        cost: pv.resolvent().cost().clone(),
        drift: 0.0,
    };
    let cfg = SimConfig {
        dt: 2e-3,
        horizon: 12.0,
        n_paths: 20_000,
        seed: 8,
        antithetic: true,
        record: 0,
    };
    for x in [0.5, 1.4] {
        let est = estimate_cost(&cfg, &policy, x).unwrap();
        let se = est.stderr.unwrap();
        let target = pv.value(x);
        assert!(
            (est.mean - target).abs() < 3.0 * se + 0.005 * target,
            "x={x}: {} vs {target} (SE {se})",
            est.mean
        );
    }
}
