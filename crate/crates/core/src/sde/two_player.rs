//! Two-player band policies simulated on the original coordinates `(X¹, X²)`.

use rayon::prelude::*;

use super::export::PathRecord;
use super::rng::NormalStream;
use super::skorokhod::check_band;
use super::{mean_estimate, MeanEstimate, SimConfig};
use crate::error::{invalid, Result};
use crate::model::cost::RunningCost;
use crate::model::game::{GameSpec, SigmaConvention};
use crate::model::resolvent::Resolvent;
use crate::reduction::reduce_two_player;
use crate::thresholds::{solve_threshold, ThresholdOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoPlayerPolicy {
    /// Regulator's band `c₁` at `K_eff = min(K₁, K₂)/2`.
    Pareto,
    /// Equilibrium band `c₂` at `K_eff = K` (needs `K₁ = K₂`).
    Nash,
    /// Any band half-width, attributed like the Pareto policy.
    CustomBand(f64),
}

impl TwoPlayerPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            TwoPlayerPolicy::Pareto => "pareto",
            TwoPlayerPolicy::Nash => "nash",
            TwoPlayerPolicy::CustomBand(_) => "custom",
        }
    }
}

/// Who acts when `K₁ = K₂` under the regulator's policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlSplit {
    /// Player 1 pushes down at `+c`, player 2 pushes down at `−c`.
    #[default]
    Shared,
    /// Player 2 does all the work.
    SinglePlayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoPlayerOptions {
    pub convention: SigmaConvention,
    pub split: ControlSplit,
    pub thresholds: ThresholdOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Actor {
    OneUp,
    OneDown,
    TwoUp,
    TwoDown,
}

#[derive(Debug, Clone, Copy)]
struct Resolved {
    c: f64,
    /// Acts when `X¹ − X² > c`.
    upper: Actor,
    /// Acts when `X¹ − X² < −c`.
    lower: Actor,
}

#[derive(Debug, Clone)]
pub struct TwoPlayerBatch {
    pub policy: TwoPlayerPolicy,
    pub c: f64,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    /// `L₁J¹ + L₂J²` per path.
    pub welfare: Vec<f64>,
    pub j1_estimate: MeanEstimate,
    pub j2_estimate: MeanEstimate,
    pub welfare_estimate: MeanEstimate,
    /// Largest `|X¹ − X²|` over all paths and time indices.
    pub max_abs_spread: f64,
    /// Total control exerted by each player, summed over paths.
    pub control_totals: [f64; 2],
    /// Time average of `(X¹ − X²)²`.
    pub spread_square: MeanEstimate,
    /// Time average of `Σ aᵢ |Xⁱ − X̄|`.
    pub dispersion: MeanEstimate,
    pub recorded: Vec<PathRecord>,
}

#[derive(Debug, Clone)]
pub struct PolicyComparison {
    pub pareto: TwoPlayerBatch,
    pub nash: TwoPlayerBatch,
    pub gap: f64,
    /// Nash minus Pareto aggregate cost.
    pub welfare_difference: f64,
    /// `√(SE_P² + SE_N²)`.
    pub combined_stderr: Option<f64>,
    /// Standard error of the per-path difference on shared noise.
    pub paired_stderr: Option<f64>,
}

fn resolve(
    spec: &GameSpec,
    x0: [f64; 2],
    policy: TwoPlayerPolicy,
    opts: &TwoPlayerOptions,
) -> Result<Resolved> {
    let red = reduce_two_player(spec, x0, opts.convention)?;
    let (k1, k2) = (spec.k_plus[0], spec.k_plus[1]);
    let res = || {
        Resolvent::new(
            red.problem.cost.clone(),
            red.problem.sigma_tilde,
            red.problem.rho,
        )
    };
    let regulator = |c: f64| {
        let (upper, lower) = if k1 > k2 {
            (Actor::TwoUp, Actor::TwoDown)
        } else if k1 < k2 {
            (Actor::OneDown, Actor::OneUp)
        } else {
            match opts.split {
                ControlSplit::Shared => (Actor::OneDown, Actor::TwoDown),
                ControlSplit::SinglePlayer => (Actor::TwoUp, Actor::TwoDown),
            }
        };
        Resolved { c, upper, lower }
    };
    Ok(match policy {
        TwoPlayerPolicy::Pareto => {
            regulator(solve_threshold(&res()?, red.problem.k_eff, &opts.thresholds)?.c)
        }
        TwoPlayerPolicy::CustomBand(c) => {
            check_band(c)?;
            regulator(c)
        }
        TwoPlayerPolicy::Nash => {
            if k1 != k2 {
                return Err(invalid("the closed-form Nash band needs K1 = K2"));
            }
            let c = solve_threshold(&res()?, k1, &opts.thresholds)?.c;
            Resolved {
                c,
                upper: Actor::OneDown,
                lower: Actor::TwoDown,
            }
        }
    })
}

pub fn simulate_two_player(
    spec: &GameSpec,
    x0: [f64; 2],
    policy: TwoPlayerPolicy,
    config: &SimConfig,
    opts: &TwoPlayerOptions,
) -> Result<TwoPlayerBatch> {
    Ok(simulate_two_player_policies(spec, x0, &[policy], config, opts)?.remove(0))
}

/// Runs several policies on the same Brownian increments in one pass.
pub fn simulate_two_player_policies(
    spec: &GameSpec,
    x0: [f64; 2],
    policies: &[TwoPlayerPolicy],
    config: &SimConfig,
    opts: &TwoPlayerOptions,
) -> Result<Vec<TwoPlayerBatch>> {
    config.validate()?;
    let resolved = policies
        .iter()
        .map(|&p| resolve(spec, x0, p, opts))
        .collect::<Result<Vec<_>>>()?;
    let h = match &spec.payoff {
        crate::model::game::Payoff::Difference(h) => h.clone(),
        _ => unreachable!("reduce_two_player accepts only difference payoffs"),
    };
    let steps = config.steps();
    let outcomes: Vec<Vec<PathOutcome>> = (0..config.n_paths)
        .into_par_iter()
        .map(|path| simulate_path(spec, &h, x0, &resolved, config, steps, path))
        .collect();

    let mut batches = Vec::with_capacity(policies.len());
    for (p, (policy, r)) in policies.iter().zip(&resolved).enumerate() {
        let mut j1 = Vec::with_capacity(config.n_paths);
        let mut j2 = Vec::with_capacity(config.n_paths);
        let mut welfare = Vec::with_capacity(config.n_paths);
        let mut spread_sq = Vec::with_capacity(config.n_paths);
        let mut dispersion = Vec::with_capacity(config.n_paths);
        let mut max_abs_spread = 0.0f64;
        let mut control_totals = [0.0; 2];
        let mut recorded = Vec::new();
        for per_path in &outcomes {
            let o = &per_path[p];
            j1.push(o.j[0]);
            j2.push(o.j[1]);
            welfare.push(spec.weights[0] * o.j[0] + spec.weights[1] * o.j[1]);
            spread_sq.push(o.spread_square);
            dispersion.push(o.dispersion);
            max_abs_spread = max_abs_spread.max(o.max_abs_spread);
            control_totals[0] += o.control[0];
            control_totals[1] += o.control[1];
            recorded.extend(o.record.clone());
        }
        let anti = config.antithetic;
        batches.push(TwoPlayerBatch {
            policy: *policy,
            c: r.c,
            j1_estimate: mean_estimate(&j1, anti),
            j2_estimate: mean_estimate(&j2, anti),
            welfare_estimate: mean_estimate(&welfare, anti),
            spread_square: mean_estimate(&spread_sq, anti),
            dispersion: mean_estimate(&dispersion, anti),
            j1,
            j2,
            welfare,
            max_abs_spread,
            control_totals,
            recorded,
        });
    }
    Ok(batches)
}

/// Pareto and Nash policies on shared noise.
pub fn compare_policies(
    spec: &GameSpec,
    x0: [f64; 2],
    config: &SimConfig,
    opts: &TwoPlayerOptions,
) -> Result<PolicyComparison> {
    let mut batches = simulate_two_player_policies(
        spec,
        x0,
        &[TwoPlayerPolicy::Pareto, TwoPlayerPolicy::Nash],
        config,
        opts,
    )?;
    let nash = batches.pop().expect("two batches");
    let pareto = batches.pop().expect("two batches");
    let diffs: Vec<f64> = nash
        .welfare
        .iter()
        .zip(&pareto.welfare)
        .map(|(n, p)| n - p)
        .collect();
    let paired = mean_estimate(&diffs, config.antithetic);
    let combined_stderr = match (pareto.welfare_estimate.stderr, nash.welfare_estimate.stderr) {
        (Some(a), Some(b)) => Some((a * a + b * b).sqrt()),
        _ => None,
    };
    Ok(PolicyComparison {
        gap: nash.c - pareto.c,
        welfare_difference: nash.welfare_estimate.mean - pareto.welfare_estimate.mean,
        combined_stderr,
        paired_stderr: paired.stderr,
        pareto,
        nash,
    })
}

#[derive(Debug, Clone)]
struct PathOutcome {
    j: [f64; 2],
    control: [f64; 2],
    max_abs_spread: f64,
    spread_square: f64,
    dispersion: f64,
    record: Option<PathRecord>,
}

struct State {
    x: [f64; 2],
    up: [f64; 2],
    down: [f64; 2],
    control_cost: [f64; 2],
    running: f64,
    h_prev: f64,
    spread_sq: f64,
    dispersion: f64,
    max_abs: f64,
    record: Option<PathRecord>,
}

/// Applies the policy at the current state; returns the pushes made as
/// `(player, up, down)` amounts.
fn act(r: &Resolved, x: &mut [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let mut up = [0.0; 2];
    let mut down = [0.0; 2];
    let y = x[0] - x[1];
    let (actor, d) = if y > r.c {
        (r.upper, y - r.c)
    } else if y < -r.c {
        (r.lower, -r.c - y)
    } else {
        return (up, down);
    };
    match actor {
        Actor::OneUp => {
            x[0] += d;
            up[0] = d;
        }
        Actor::OneDown => {
            x[0] -= d;
            down[0] = d;
        }
        Actor::TwoUp => {
            x[1] += d;
            up[1] = d;
        }
        Actor::TwoDown => {
            x[1] -= d;
            down[1] = d;
        }
    }
    (up, down)
}

fn simulate_path(
    spec: &GameSpec,
    h: &RunningCost,
    x0: [f64; 2],
    resolved: &[Resolved],
    config: &SimConfig,
    steps: usize,
    path: usize,
) -> Vec<PathOutcome> {
    let dt = config.dt;
    let sqdt = dt.sqrt();
    let decay = (-spec.rho * dt).exp();
    let d = spec.brownian_dim();
    let a = &spec.benchmark_weights;
    let disp = |x: &[f64; 2]| {
        let bar = a[0] * x[0] + a[1] * x[1];
        a[0] * (x[0] - bar).abs() + a[1] * (x[1] - bar).abs()
    };
    let mut normals = NormalStream::for_path(config.seed, path, config.antithetic);
    let mut db = vec![0.0; d];

    let mut states: Vec<State> = resolved
        .iter()
        .map(|r| {
            let mut x = x0;
            let (up, down) = act(r, &mut x);
            let mut record = (path < config.record).then(|| PathRecord::new(path, 2, steps));
            if let Some(rec) = record.as_mut() {
                rec.push(&x, &up, &down);
            }
            State {
                control_cost: [
                    spec.k_plus[0] * up[0] + spec.k_minus[0] * down[0],
                    spec.k_plus[1] * up[1] + spec.k_minus[1] * down[1],
                ],
                h_prev: h.value(x[0] - x[1]),
                max_abs: (x[0] - x[1]).abs(),
                x,
                up,
                down,
                running: 0.0,
                spread_sq: 0.0,
                dispersion: 0.0,
                record,
            }
        })
        .collect();

    let mut disc = 1.0;
    for _ in 0..steps {
        normals.fill(&mut db);
        let mut shock = [0.0; 2];
        for (i, s) in shock.iter_mut().enumerate() {
            *s = spec.mu[i] * dt
                + sqdt
                    * spec.sigma[i]
                        .iter()
                        .zip(&db)
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
        }
        let disc_next = disc * decay;
        for (st, r) in states.iter_mut().zip(resolved) {
            let y_prev = st.x[0] - st.x[1];
            let disp_prev = disp(&st.x);
            st.x[0] += shock[0];
            st.x[1] += shock[1];
            let (up, down) = act(r, &mut st.x);
            for i in 0..2 {
                st.control_cost[i] += disc * (spec.k_plus[i] * up[i] + spec.k_minus[i] * down[i]);
                st.up[i] += up[i];
                st.down[i] += down[i];
            }
            let y = st.x[0] - st.x[1];
            let h_next = h.value(y);
            st.running += disc * st.h_prev + disc_next * h_next;
            st.h_prev = h_next;
            st.spread_sq += 0.5 * (y_prev * y_prev + y * y);
            st.dispersion += 0.5 * (disp_prev + disp(&st.x));
            st.max_abs = st.max_abs.max(y.abs());
            if let Some(rec) = st.record.as_mut() {
                rec.push(&st.x, &st.up, &st.down);
            }
        }
        disc = disc_next;
    }
    states
        .into_iter()
        .map(|st| {
            let running = 0.5 * dt * st.running;
            PathOutcome {
                j: [running + st.control_cost[0], running + st.control_cost[1]],
                control: [st.up[0] + st.down[0], st.up[1] + st.down[1]],
                max_abs_spread: st.max_abs,
                spread_square: st.spread_sq / steps as f64,
                dispersion: st.dispersion / steps as f64,
                record: st.record,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::game::Payoff;

    pub(crate) fn spec(k1: f64, k2: f64) -> GameSpec {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        GameSpec {
            mu: vec![0.0, 0.0],
            sigma: vec![vec![s, 0.0], vec![0.0, s]],
            rho: 1.0,
            k_plus: vec![k1, k2],
            k_minus: vec![k1, k2],
            weights: vec![0.5, 0.5],
            payoff: Payoff::Difference(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap()),
            benchmark_weights: vec![0.5, 0.5],
        }
    }

    fn small() -> SimConfig {
        SimConfig {
            dt: 1e-2,
            horizon: 3.0,
            n_paths: 50,
            seed: 3,
            record: 2,
            ..Default::default()
        }
    }

    #[test]
    fn free_rider_never_acts() {
        let b = simulate_two_player(
            &spec(2.0, 1.0),
            [0.0, 0.0],
            TwoPlayerPolicy::Pareto,
            &small(),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(b.control_totals[0], 0.0);
        assert!(b.control_totals[1] > 0.0);
        assert!(b.max_abs_spread <= b.c + 1e-12);
        assert_eq!(b.recorded.len(), 2);
    }

    #[test]
    fn paper_split_shares_work() {
        let b = simulate_two_player(
            &spec(1.0, 1.0),
            [0.0, 0.0],
            TwoPlayerPolicy::Pareto,
            &small(),
            &Default::default(),
        )
        .unwrap();
        assert!(b.control_totals[0] > 0.0 && b.control_totals[1] > 0.0);
        let opts = TwoPlayerOptions {
            split: ControlSplit::SinglePlayer,
            ..Default::default()
        };
        let single = simulate_two_player(
            &spec(1.0, 1.0),
            [0.0, 0.0],
            TwoPlayerPolicy::Pareto,
            &small(),
            &opts,
        )
        .unwrap();
        assert_eq!(single.control_totals[0], 0.0);
        // Same band and same noise: the regulator's cost does not depend on the split.
        assert!((single.welfare_estimate.mean - b.welfare_estimate.mean).abs() < 1e-12);
    }

    #[test]
    fn nash_needs_equal_costs() {
        assert!(simulate_two_player(
            &spec(2.0, 1.0),
            [0.0, 0.0],
            TwoPlayerPolicy::Nash,
            &small(),
            &Default::default()
        )
        .is_err());
    }
}
