use sck_core::hjb_fd::{
    extract_free_boundary_1d, extract_free_boundary_2d, sample, solve_vi_1d, solve_vi_2d,
    write_frontier_csv, EdgeRule, FdOptions, Grid1D, Grid2D, Label2D, Method2D, Problem1D,
    VISolution1D,
};
use sck_core::model::cost::RunningCost;
use sck_core::model::game::{GameSpec, Payoff};
use sck_core::model::resolvent::Resolvent;
use sck_core::thresholds::ThresholdOptions;
use sck_core::valuefn::{Branch, PiecewiseValue};

fn solve(n: usize, problem: Problem1D) -> VISolution1D {
    let grid = Grid1D::symmetric(4.0, n).unwrap();
    solve_vi_1d(
        &grid,
        &sample(&grid, |x| x * x),
        &problem,
        &FdOptions::default(),
    )
    .unwrap()
}

fn analytic() -> PiecewiseValue {
    let res = Resolvent::new(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap(), 1.0, 1.0).unwrap();
    PiecewiseValue::solve(res, 0.5, &ThresholdOptions::default()).unwrap()
}

fn game(sigma: Vec<Vec<f64>>, k: [f64; 2], payoff: Payoff) -> GameSpec {
    GameSpec {
        mu: vec![0.0, 0.0],
        sigma,
        rho: 1.0,
        k_plus: k.to_vec(),
        k_minus: k.to_vec(),
        weights: vec![0.5, 0.5],
        payoff,
        benchmark_weights: vec![0.5, 0.5],
    }
}

fn diagonal_sigma() -> Vec<Vec<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![vec![s, 0.0], vec![0.0, s]]
}

#[test]
fn converged_solution_is_complementary_convex_and_bounded() {
    let tol = FdOptions::default().tol;
    for problem in [
        Problem1D::symmetric(1.0, 1.0, 0.5),
        Problem1D {
            sigma: 0.7,
            rho: 0.5,
            k_plus: 0.8,
            k_minus: 0.3,
            mu: 0.2,
        },
    ] {
        let sol = solve(801, problem);
        let d = sol.grid.spacing();
        for (i, vals) in sol.branch_values.iter().enumerate() {
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(max.abs() <= tol, "node {i}: {vals:?}");
        }
        for w in sol.values.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -10.0 * tol);
        }
        for w in sol.values.windows(2) {
            let s = (w[1] - w[0]) / d;
            assert!(s >= -problem.k_plus - 1e-9 && s <= problem.k_minus + 1e-9);
        }
    }
}

#[test]
fn refinement_reduces_error() {
    let pv = analytic();
    let errs: Vec<f64> = [201, 401, 801]
        .iter()
        .map(|&n| {
            let sol = solve(n, Problem1D::symmetric(1.0, 1.0, 0.5));
            sol.grid
                .points()
                .zip(&sol.values)
                .map(|(x, u)| (u - pv.value(x)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(
        errs[0] / errs[1] >= 1.5 && errs[1] / errs[2] >= 1.5,
        "{errs:?}"
    );
}

#[test]
fn drift_shifts_the_band_against_itself() {
    let still =
        extract_free_boundary_1d(&solve(801, Problem1D::symmetric(1.0, 1.0, 0.5)), 0.5, 0.5)
            .unwrap();
    let up = Problem1D {
        mu: 0.5,
        ..Problem1D::symmetric(1.0, 1.0, 0.5)
    };
    let drifted = extract_free_boundary_1d(&solve(801, up), 0.5, 0.5).unwrap();
    let centre = |b: &sck_core::hjb_fd::FreeBoundary1D| 0.5 * (b.upper.unwrap() + b.lower.unwrap());
    assert!(centre(&drifted) < centre(&still));
}

#[test]
fn two_dimensional_solution_is_translation_invariant() {
    let grid = Grid2D::square(3.0, 61).unwrap();
    let h = RunningCost::quadratic(1.0, 0.0, 0.0).unwrap();
    let sol = solve_vi_2d(
        &grid,
        &game(diagonal_sigma(), [1.0, 1.0], Payoff::Difference(h)),
        EdgeRule::Auto,
        &FdOptions::default(),
    )
    .unwrap();
    assert_eq!(sol.method, Method2D::Direct);
    for i in 10..50 {
        for j in 10..50 {
            assert!((sol.value(i + 1, j + 1) - sol.value(i, j)).abs() < 1e-8);
        }
    }
    for i in 1..60 {
        for j in 1..60 {
            let axis1 = sol.value(i + 1, j) - 2.0 * sol.value(i, j) + sol.value(i - 1, j);
            let diag = sol.value(i + 1, j - 1) - 2.0 * sol.value(i, j) + sol.value(i - 1, j + 1);
            assert!(axis1 >= -1e-9 && diag >= -1e-9);
        }
    }
    let frontier = extract_free_boundary_2d(&sol).unwrap();
    assert!(!frontier.left.is_empty() && !frontier.right.is_empty());
    let c1 = analytic().threshold();
    let d = grid.x1.spacing();
    for p in frontier.right.iter().filter(|p| p[1].abs() < 1.5) {
        assert!(((p[0] - p[1]) - c1).abs() <= 2.0 * d, "{p:?}");
    }
    let mut csv = Vec::new();
    write_frontier_csv(&frontier, &mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("side,x1,x2\n"));
}

#[test]
fn strong_correlation_falls_back_to_the_rotated_solve() {
    let grid = Grid2D::square(3.0, 61).unwrap();
    let h = RunningCost::quadratic(1.0, 0.0, 0.0).unwrap();
    let sigma = vec![vec![1.0, 0.0], vec![0.9, 0.1]];
    let sol = solve_vi_2d(
        &grid,
        &game(sigma, [1.0, 1.0], Payoff::Difference(h.clone())),
        EdgeRule::Auto,
        &FdOptions::default(),
    )
    .unwrap();
    assert_eq!(sol.method, Method2D::Rotated);
    assert!(!sol.warnings.is_empty());
    // σ̃² = 1 − 1.8 + 0.82 = 0.02.
    let res = Resolvent::new(h, 0.02f64.sqrt(), 1.0).unwrap();
    let pv = PiecewiseValue::solve(res, 0.5, &ThresholdOptions::default()).unwrap();
    let err = (0..61)
        .flat_map(|i| (0..61).map(move |j| (i, j)))
        .map(|(i, j)| (sol.value(i, j) - pv.value(grid.x1.x(i) - grid.x2.x(j))).abs())
        .fold(0.0, f64::max);
    assert!(err < 5e-2, "{err}");
}

#[test]
fn interbank_payoff_solves_with_linear_growth_edges() {
    let grid = Grid2D::square(3.0, 41).unwrap();
    let spec = game(
        diagonal_sigma(),
        [1.0, 2.0],
        Payoff::Interbank {
            kappa: vec![1.0, 1.0],
            nu: vec![0.2, 0.2],
        },
    );
    let sol = solve_vi_2d(&grid, &spec, EdgeRule::Auto, &FdOptions::default()).unwrap();
    assert_eq!(sol.edge_rule, EdgeRule::LinearGrowth);
    assert!(sol.residual < 1e-10);
    assert!(sol.labels.iter().any(|l| l.is_active()));
    let (i0, j0) = (20, 20);
    assert_eq!(sol.label(i0, j0), Label2D::Interior);
}

#[test]
fn fd_labels_match_sides() {
    let sol = solve(401, Problem1D::symmetric(1.0, 1.0, 0.5));
    assert_eq!(sol.labels[200], Branch::Interior);
    assert_eq!(sol.labels[390], Branch::Upper);
    assert_eq!(sol.labels[10], Branch::Lower);
}
