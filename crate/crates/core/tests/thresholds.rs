use proptest::prelude::*;
use sck_core::model::cost::RunningCost;
use sck_core::model::resolvent::Resolvent;
use sck_core::thresholds::{smoothing_residual, solve_threshold, ThresholdOptions};

fn quadratic(a: f64, sigma: f64) -> Resolvent {
    Resolvent::new(RunningCost::quadratic(a, 0.0, 0.0).unwrap(), sigma, 1.0).unwrap()
}

#[test]
fn residual_increases_past_the_slope_zero() {
    // Decreasing curvature on y > 0, so the residual is increasing beyond
    // the point where p′ reaches K_eff.
    for b in [0.0, 0.5, 2.0, 5.0] {
        let res =
            Resolvent::new(RunningCost::softened_quadratic(0.5, b).unwrap(), 1.0, 1.0).unwrap();
        let k = 0.5;
        let mut start = 0.0;
        while res.dp(start) < k {
            start += 1e-3;
        }
        let mut prev = smoothing_residual(start, &res, k).unwrap();
        for i in 1..400 {
            let x = start + i as f64 * 0.01;
            let f = smoothing_residual(x, &res, k).unwrap();
            assert!(f >= prev - 1e-12, "b={b}: F decreased at {x}");
            prev = f;
        }
    }
}

#[test]
fn threshold_increases_with_cost() {
    let res = quadratic(1.0, 1.0);
    let opts = ThresholdOptions::default();
    let cs: Vec<f64> = (1..=30)
        .map(|i| solve_threshold(&res, 0.1 * i as f64, &opts).unwrap().c)
        .collect();
    assert!(cs.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn threshold_nondecreasing_in_volatility() {
    let opts = ThresholdOptions::default();
    let cs: Vec<f64> = [0.1, 0.3, 0.6, 1.0, 1.5, 2.5, 4.0]
        .iter()
        .map(|&s| solve_threshold(&quadratic(1.0, s), 0.5, &opts).unwrap().c)
        .collect();
    assert!(cs.windows(2).all(|w| w[1] >= w[0]), "{cs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn root_is_certified(k in 0.05f64..5.0, s in 0.2f64..3.0, a in 0.2f64..5.0) {
        let res = quadratic(a, s);
        let sol = solve_threshold(&res, k, &ThresholdOptions::default()).unwrap();
        prop_assert!(sol.residual.abs() < 1e-12);
        let d = 1e-6 * sol.c.max(1e-3);
        prop_assert!(smoothing_residual(sol.c - d, &res, k).unwrap() < 0.0);
        prop_assert!(smoothing_residual(sol.c + d, &res, k).unwrap() > 0.0);
    }

    #[test]
    fn softened_costs_have_certified_roots(k in 0.1f64..2.0, b in 0.0f64..3.0) {
        let res = Resolvent::new(RunningCost::softened_quadratic(0.5, b).unwrap(), 1.0, 1.0).unwrap();
        let opts = ThresholdOptions { tol: 1e-9, width_tol: 1e-10, ..Default::default() };
        let sol = solve_threshold(&res, k, &opts).unwrap();
        prop_assert!(sol.residual.abs() < 1e-9);
        prop_assert!(sol.c > 0.0);
    }
}
