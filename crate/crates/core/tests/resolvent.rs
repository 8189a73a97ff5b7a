use proptest::prelude::*;
use sck_core::model::cost::RunningCost;
use sck_core::model::resolvent::Resolvent;
use sck_core::sde::rng::NormalStream;

fn softened(a: f64, b: f64) -> RunningCost {
    RunningCost::softened_quadratic(a, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_in_the_running_cost(x in -3.0f64..3.0, a in 0.2f64..2.0, b in 0.0f64..2.0, s in 0.5f64..2.0) {
        let tol = 1e-9;
        let h1 = softened(a, b);
        let h2 = RunningCost::quadratic(0.7, 0.0, 0.0).unwrap();
        let sum = h1.sum(&h2);
        let p1 = Resolvent::with_tolerance(h1, s, 1.0, tol).unwrap().p(x);
        let p2 = Resolvent::with_tolerance(h2, s, 1.0, tol).unwrap().p(x);
        let p12 = Resolvent::with_tolerance(sum, s, 1.0, tol).unwrap().p(x);
        prop_assert!((p12 - p1 - p2).abs() < 10.0 * tol * (1.0 + p12.abs()));
    }

    #[test]
    fn solves_the_uncontrolled_equation(x in -4.0f64..4.0, b in 0.0f64..3.0, rho in 0.3f64..3.0) {
        let tol = 1e-9;
        let res = Resolvent::with_tolerance(softened(0.5, b), 1.3, rho, tol).unwrap();
        let r = res.pde_residual(x);
        prop_assert!(r.abs() < 10.0 * tol * (1.0 + res.p(x).abs()) * rho.max(1.0) / rho.min(1.0), "{}", r);
    }

    #[test]
    fn curvature_within_bounds(x in -6.0f64..6.0, a in 0.1f64..2.0, b in 0.0f64..3.0) {
        let res = Resolvent::new(softened(a, b), 0.8, 1.5).unwrap();
        let (lo, hi) = res.cost().curvature_bounds();
        let d2 = res.d2p(x);
        prop_assert!(d2 >= lo / 1.5 - 1e-9 && d2 <= hi / 1.5 + 1e-9, "{} not in [{}, {}]", d2, lo / 1.5, hi / 1.5);
    }
}

#[test]
fn quadratic_closed_form_matches_gaussian_moments() {
    // E∫e^{−ρt}(x+σB_t)² dt = x²/ρ + σ²/ρ².
    let res = Resolvent::new(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap(), 1.5, 2.0).unwrap();
    assert!(res.uses_closed_form());
    assert!((res.p(0.4) - (0.16 / 2.0 + 2.25 / 4.0)).abs() < 1e-14);
}

#[test]
fn matches_direct_simulation() {
    let (sigma, rho, x) = (1.0, 1.0, 0.3);
    let res = Resolvent::new(softened(0.5, 1.0), sigma, rho).unwrap();
    let h = res.cost().clone();
    let dt = 2e-3;
    let steps = (14.0 / dt) as usize; // e^{−14} < 1e−6
    let n = 4000;
    let mut costs = Vec::with_capacity(n);
    for path in 0..n {
        let mut normals = NormalStream::for_path(11, path, false);
        let mut y = x;
        let mut disc = 1.0;
        let decay = (-rho * dt).exp();
        let mut acc = 0.5 * h.value(y);
        for _ in 0..steps {
            y += sigma * dt.sqrt() * normals.next();
            disc *= decay;
            acc += disc * h.value(y);
        }
        acc -= 0.5 * disc * h.value(y);
        costs.push(acc * dt);
    }
    let mean = costs.iter().sum::<f64>() / n as f64;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let p = res.p(x);
    assert!((mean - p).abs() < 3.0 * se, "MC {mean} vs p {p} (SE {se})");
}
