use proptest::prelude::*;
use sck_core::model::cost::RunningCost;
use sck_core::model::game::InvestmentSpec;
use sck_core::reduction::{
    band_control, demand_constant, full_cost, full_state_paths, lift_control, reduce_central,
    reduced_cost, reduced_state_paths, sample_noise, ControlPath, DemandTreatment,
};

fn spec(p: [[f64; 2]; 2]) -> InvestmentSpec {
    let q = |a: f64| RunningCost::quadratic(a, 0.0, 0.0).unwrap();
    InvestmentSpec {
        capacity: vec![vec![1.0, 0.2], vec![0.5, 0.9]],
        drift: vec![vec![0.02, 0.0], vec![-0.01, 0.04]],
        volatility: vec![
            vec![vec![0.3, 0.0], vec![0.1, 0.2]],
            vec![vec![0.0, 0.2], vec![0.2, 0.0]],
        ],
        expand_cost: vec![p[0].to_vec(), p[1].to_vec()],
        contract_cost: vec![vec![0.6, 0.9], vec![0.8, 0.7]],
        costs: vec![vec![q(1.0), q(0.5)], vec![q(2.0), q(1.5)]],
        profit: vec![0.3, 0.5],
        demand_drift: vec![0.05, 0.1],
        demand_vol: vec![0.15, 0.25],
        demand_init: vec![1.2, 1.0],
        discount: 0.7,
    }
}

/// Arbitrary nonnegative full control from a seed.
fn random_control(times: Vec<f64>, investors: usize, products: usize, seed: u64) -> ControlPath {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut c = ControlPath::zeros(times, investors, products);
    for k in 0..c.len() {
        for i in 0..investors {
            for j in 0..products {
                if next() < 0.05 {
                    c.add_expand(k, i, j, 0.1 * next());
                }
                if next() < 0.05 {
                    c.add_contract(k, i, j, 0.1 * next());
                }
            }
        }
    }
    c
}

/// `L̂ʲ = Σᵢ Lⁱʲ`, `M̂ʲ = Σᵢ Mⁱʲ`.
fn aggregate(c: &ControlPath) -> ControlPath {
    let mut out = ControlPath::zeros(c.times.clone(), 1, c.products);
    for k in 0..c.len() {
        for i in 0..c.agents {
            for j in 0..c.products {
                out.add_expand(k, 0, j, c.expand(k, i, j));
                out.add_contract(k, 0, j, c.contract(k, i, j));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn aggregate_control_drives_the_same_state(seed in 0u64..10_000, path in 0usize..1000) {
        let inv = spec([[1.0, 0.8], [0.7, 1.1]]);
        let red = reduce_central(&inv).unwrap();
        let noise = sample_noise(&inv, 0.01, 200, seed, path);
        let full_control = random_control(noise.times(), 2, 2, seed);
        let full = full_state_paths(&inv, &noise, &full_control).unwrap();
        let reduced = reduced_state_paths(&red, &noise, &aggregate(&full_control)).unwrap();
        for (a, b) in full.aggregate().iter().zip(&reduced) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_cost_is_a_lower_bound(seed in 0u64..10_000) {
        let inv = spec([[1.0, 0.8], [0.7, 1.1]]);
        let red = reduce_central(&inv).unwrap();
        let c = demand_constant(&inv);
        let noise = sample_noise(&inv, 0.01, 200, seed, 0);
        let full_control = random_control(noise.times(), 2, 2, seed);
        let full = full_state_paths(&inv, &noise, &full_control).unwrap();
        let f = full_cost(&inv, &noise, &full, &full_control, DemandTreatment::Analytic).unwrap();
        let agg = aggregate(&full_control);
        let states = reduced_state_paths(&red, &noise, &agg).unwrap();
        let r = reduced_cost(&inv, &red, &noise, &states, &agg).unwrap();
        prop_assert!(f >= r - c - 1e-12);

        let lifted = lift_control(&agg, &red).unwrap();
        let lifted_full = full_state_paths(&inv, &noise, &lifted).unwrap();
        let fl = full_cost(&inv, &noise, &lifted_full, &lifted, DemandTreatment::Analytic).unwrap();
        prop_assert!((fl - (r - c)).abs() < 1e-10 * fl.abs().max(1.0));
    }

    #[test]
    fn argmin_is_scale_invariant(p in prop::array::uniform4(0.1f64..5.0), scale in 0.01f64..100.0) {
        let base = spec([[p[0], p[1]], [p[2], p[3]]]);
        let scaled = spec([[scale * p[0], scale * p[1]], [scale * p[2], scale * p[3]]]);
        let a = reduce_central(&base).unwrap();
        let b = reduce_central(&scaled).unwrap();
        for (x, y) in a.products.iter().zip(&b.products) {
            prop_assert_eq!(x.i_plus, y.i_plus);
            prop_assert_eq!(x.i_minus, y.i_minus);
        }
    }
}

#[test]
fn pathwise_demand_matches_the_analytic_constant_on_average() {
    let inv = spec([[1.0, 0.8], [0.7, 1.1]]);
    let red = reduce_central(&inv).unwrap();
    let n = 1000;
    let (mut diffs, mut sum) = (Vec::with_capacity(n), 0.0);
    for path in 0..n {
        // Horizon 25 keeps the truncated demand integral within 1e-6.
        let noise = sample_noise(&inv, 0.01, 2500, 4, path);
        let reduced = band_control(&red, &noise, &[0.5, 0.5]).unwrap();
        let lifted = lift_control(&reduced, &red).unwrap();
        let full = full_state_paths(&inv, &noise, &lifted).unwrap();
        let a = full_cost(&inv, &noise, &full, &lifted, DemandTreatment::Analytic).unwrap();
        let p = full_cost(&inv, &noise, &full, &lifted, DemandTreatment::Pathwise).unwrap();
        diffs.push(p - a);
        sum += p - a;
    }
    let mean = sum / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!(mean.abs() < 3.0 * se + 1e-3, "mean {mean} SE {se}");
}
