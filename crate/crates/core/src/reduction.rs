//! Problem reductions: central-controller aggregation of the investment model,
//! lifting of aggregate controls back to investors, and the two-player
//! difference reduction.

use crate::error::{invalid, Error, Result};
use crate::model::cost::RunningCost;
use crate::model::game::{
    effective_volatility, GameSpec, InvestmentSpec, Payoff, ReducedProblem1D, SigmaConvention,
};
use crate::sde::rng::NormalStream;
use crate::sde::skorokhod::skorokhod_map_1d;

/// Aggregate problem for one product: `x = Σᵢ yᵢⱼ − dⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProduct {
    pub x0: f64,
    /// `Σᵢ μᵢⱼ − αⱼ`.
    pub drift: f64,
    /// `(Σᵢ σᵢⱼ, −γⱼ eⱼ)` against the stacked Brownian motion `(B, W)`.
    pub sigma: Vec<f64>,
    pub p_star: f64,
    pub q_star: f64,
    /// Cheapest expanding investor (lowest index on ties).
    pub i_plus: usize,
    /// Cheapest contracting investor (lowest index on ties).
    pub i_minus: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralReduction {
    pub products: Vec<ReducedProduct>,
    pub investors: usize,
    /// Dimension of the investors' Brownian motion `B`.
    pub brownian_dim: usize,
}

fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

pub fn reduce_central(inv: &InvestmentSpec) -> Result<CentralReduction> {
    inv.validate()?;
    let (m, np, d) = (inv.investors(), inv.products(), inv.brownian_dim());
    let products = (0..np)
        .map(|j| {
            let (i_plus, p_star) = argmin(inv.expand_cost.iter().map(|r| r[j]));
            let (i_minus, q_star) = argmin(inv.contract_cost.iter().map(|r| r[j]));
            let mut sigma = vec![0.0; d + np];
            for row in &inv.volatility {
                for (s, v) in sigma.iter_mut().zip(&row[j]) {
                    *s += v;
                }
            }
            sigma[d + j] = -inv.demand_vol[j];
            ReducedProduct {
                x0: (0..m).map(|i| inv.capacity[i][j]).sum::<f64>() - inv.demand_init[j],
                drift: (0..m).map(|i| inv.drift[i][j]).sum::<f64>() - inv.demand_drift[j],
                sigma,
                p_star,
                q_star,
                i_plus,
                i_minus,
            }
        })
        .collect();
    Ok(CentralReduction {
        products,
        investors: m,
        brownian_dim: d,
    })
}

/// `Σⱼ (rⱼ/M)(αⱼ/α² + dⱼ/α)`: the discounted expected demand revenue, which
/// separates the full cost from the aggregate cost.
pub fn demand_constant(inv: &InvestmentSpec) -> f64 {
    let m = inv.investors() as f64;
    let a = inv.discount;
    (0..inv.products())
        .map(|j| inv.profit[j] / m * (inv.demand_drift[j] / (a * a) + inv.demand_init[j] / a))
        .sum()
}

/// Control increments on a time grid, per `(agent, product)`.
///
/// The increment at index `k` is applied at `t_k` after the diffusion step
/// into `t_k`; index 0 is the jump at `t = 0`. Costs of the increment at
/// index `k ≥ 1` are discounted at `t_{k−1}`, the left end of its step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    pub times: Vec<f64>,
    pub agents: usize,
    pub products: usize,
    expand: Vec<f64>,
    contract: Vec<f64>,
}

impl ControlPath {
    pub fn zeros(times: Vec<f64>, agents: usize, products: usize) -> Self {
        let n = times.len() * agents * products;
        Self {
            times,
            agents,
            products,
            expand: vec![0.0; n],
            contract: vec![0.0; n],
        }
    }

    #[inline]
    fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.agents + i) * self.products + j
    }

    pub fn expand(&self, k: usize, i: usize, j: usize) -> f64 {
        self.expand[self.idx(k, i, j)]
    }

    pub fn contract(&self, k: usize, i: usize, j: usize) -> f64 {
        self.contract[self.idx(k, i, j)]
    }

    pub fn add_expand(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.idx(k, i, j);
        self.expand[n] += v;
    }

    pub fn add_contract(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.idx(k, i, j);
        self.contract[n] += v;
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Increments are finite and nonnegative, so cumulative controls are
    /// nondecreasing and start from zero.
    pub fn is_admissible(&self) -> bool {
        self.expand
            .iter()
            .chain(&self.contract)
            .all(|&v| v >= 0.0 && v.is_finite())
    }

    /// `Σ_k e^{−α t_{k−1}} (w⁺ dL + w⁻ dM)` for agent `i`, product `j`.
    pub fn discounted_cost(
        &self,
        i: usize,
        j: usize,
        w_plus: f64,
        w_minus: f64,
        alpha: f64,
    ) -> f64 {
        (0..self.len())
            .map(|k| {
                let t = if k == 0 { 0.0 } else { self.times[k - 1] };
                (-alpha * t).exp()
                    * (w_plus * self.expand(k, i, j) + w_minus * self.contract(k, i, j))
            })
            .sum()
    }
}

/// Routes all aggregate expansion of product `j` to `expand_to[j]` and all
/// contraction to `contract_to[j]`.
pub fn assign_control(
    reduced: &ControlPath,
    investors: usize,
    expand_to: &[usize],
    contract_to: &[usize],
) -> Result<ControlPath> {
    if reduced.agents != 1 {
        return Err(invalid("reduced control must have a single agent"));
    }
    if expand_to.len() != reduced.products || contract_to.len() != reduced.products {
        return Err(invalid("need one target investor per product"));
    }
    if expand_to.iter().chain(contract_to).any(|&i| i >= investors) {
        return Err(invalid("target investor out of range"));
    }
    let mut full = ControlPath::zeros(reduced.times.clone(), investors, reduced.products);
    for k in 0..reduced.len() {
        for j in 0..reduced.products {
            full.add_expand(k, expand_to[j], j, reduced.expand(k, 0, j));
            full.add_contract(k, contract_to[j], j, reduced.contract(k, 0, j));
        }
    }
    Ok(full)
}

/// Gives every unit of aggregate control to the cheapest investor.
pub fn lift_control(reduced: &ControlPath, red: &CentralReduction) -> Result<ControlPath> {
    let plus: Vec<usize> = red.products.iter().map(|p| p.i_plus).collect();
    let minus: Vec<usize> = red.products.iter().map(|p| p.i_minus).collect();
    assign_control(reduced, red.investors, &plus, &minus)
}

/// Brownian increments of one path: `db` is `steps × D`, `dw` is `steps × Nprod`.
#[derive(Debug, Clone, PartialEq)]
pub struct Noise {
    pub dt: f64,
    pub steps: usize,
    pub db: Vec<f64>,
    pub dw: Vec<f64>,
}

impl Noise {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt).collect()
    }
}

pub fn sample_noise(inv: &InvestmentSpec, dt: f64, steps: usize, seed: u64, path: usize) -> Noise {
    let (d, np) = (inv.brownian_dim(), inv.products());
    let mut normals = NormalStream::for_path(seed, path, false);
    let sq = dt.sqrt();
    let mut db = vec![0.0; steps * d];
    let mut dw = vec![0.0; steps * np];
    for k in 0..steps {
        for v in &mut db[k * d..(k + 1) * d] {
            *v = sq * normals.next();
        }
        for v in &mut dw[k * np..(k + 1) * np] {
            *v = sq * normals.next();
        }
    }
    Noise { dt, steps, db, dw }
}

/// Capacities `Yⁱʲ` (`(steps+1) × M × Nprod`) and demands `Dʲ` (`(steps+1) × Nprod`).
#[derive(Debug, Clone, PartialEq)]
pub struct FullPaths {
    pub investors: usize,
    pub products: usize,
    pub capacity: Vec<f64>,
    pub demand: Vec<f64>,
}

impl FullPaths {
    pub fn capacity(&self, k: usize, i: usize, j: usize) -> f64 {
        self.capacity[(k * self.investors + i) * self.products + j]
    }

    pub fn demand(&self, k: usize, j: usize) -> f64 {
        self.demand[k * self.products + j]
    }

    /// `Σᵢ Yⁱʲ`.
    pub fn total_capacity(&self, k: usize, j: usize) -> f64 {
        (0..self.investors).map(|i| self.capacity(k, i, j)).sum()
    }

    /// `Xʲ = Σᵢ Yⁱʲ − Dʲ` on every time index, `(steps+1) × Nprod`.
    pub fn aggregate(&self) -> Vec<f64> {
        let n = self.demand.len() / self.products;
        (0..n)
            .flat_map(|k| (0..self.products).map(move |j| (k, j)))
            .map(|(k, j)| self.total_capacity(k, j) - self.demand(k, j))
            .collect()
    }
}

fn check_shapes(
    noise: &Noise,
    control: &ControlPath,
    agents: usize,
    products: usize,
) -> Result<()> {
    if control.len() != noise.steps + 1 || control.agents != agents || control.products != products
    {
        return Err(invalid(format!(
            "control path is {}x{}x{}, expected {}x{}x{}",
            control.len(),
            control.agents,
            control.products,
            noise.steps + 1,
            agents,
            products
        )));
    }
    Ok(())
}

pub fn full_state_paths(
    inv: &InvestmentSpec,
    noise: &Noise,
    control: &ControlPath,
) -> Result<FullPaths> {
    let (m, np, d) = (inv.investors(), inv.products(), inv.brownian_dim());
    check_shapes(noise, control, m, np)?;
    let n = noise.steps + 1;
    let mut capacity = vec![0.0; n * m * np];
    let mut demand = vec![0.0; n * np];
    for k in 0..n {
        for j in 0..np {
            let dd = if k == 0 {
                inv.demand_init[j]
            } else {
                demand[(k - 1) * np + j]
                    + inv.demand_drift[j] * noise.dt
                    + inv.demand_vol[j] * noise.dw[(k - 1) * np + j]
            };
            demand[k * np + j] = dd;
            for i in 0..m {
                let base = if k == 0 {
                    inv.capacity[i][j]
                } else {
                    let shock: f64 = inv.volatility[i][j]
                        .iter()
                        .zip(&noise.db[(k - 1) * d..k * d])
                        .map(|(s, b)| s * b)
                        .sum();
                    capacity[((k - 1) * m + i) * np + j] + inv.drift[i][j] * noise.dt + shock
                };
                capacity[(k * m + i) * np + j] =
                    base + control.expand(k, i, j) - control.contract(k, i, j);
            }
        }
    }
    Ok(FullPaths {
        investors: m,
        products: np,
        capacity,
        demand,
    })
}

/// Aggregate dynamics `dX = μ̂ dt + σ̂·dB̂ + dL̂ − dM̂`, `(steps+1) × Nprod`.
pub fn reduced_state_paths(
    red: &CentralReduction,
    noise: &Noise,
    control: &ControlPath,
) -> Result<Vec<f64>> {
    let np = red.products.len();
    check_shapes(noise, control, 1, np)?;
    let increments = reduced_increments(red, noise);
    let n = noise.steps + 1;
    let mut x = vec![0.0; n * np];
    for k in 0..n {
        for (j, p) in red.products.iter().enumerate() {
            let base = if k == 0 {
                p.x0
            } else {
                x[(k - 1) * np + j] + increments[(k - 1) * np + j]
            };
            x[k * np + j] = base + control.expand(k, 0, j) - control.contract(k, 0, j);
        }
    }
    Ok(x)
}

/// Uncontrolled increments `μ̂ dt + σ̂·ΔB̂`, `steps × Nprod`.
fn reduced_increments(red: &CentralReduction, noise: &Noise) -> Vec<f64> {
    let (np, d) = (red.products.len(), red.brownian_dim);
    let mut out = vec![0.0; noise.steps * np];
    for k in 0..noise.steps {
        for (j, p) in red.products.iter().enumerate() {
            let shock: f64 = p.sigma[..d]
                .iter()
                .zip(&noise.db[k * d..(k + 1) * d])
                .map(|(s, b)| s * b)
                .sum::<f64>()
                + p.sigma[d + j] * noise.dw[k * np + j];
            out[k * np + j] = p.drift * noise.dt + shock;
        }
    }
    out
}

/// Aggregate control keeping each product in `[−b_j, b_j]`.
pub fn band_control(red: &CentralReduction, noise: &Noise, bands: &[f64]) -> Result<ControlPath> {
    let np = red.products.len();
    if bands.len() != np {
        return Err(invalid("need one band per product"));
    }
    let inc = reduced_increments(red, noise);
    let mut control = ControlPath::zeros(noise.times(), 1, np);
    for (j, p) in red.products.iter().enumerate() {
        let incs: Vec<f64> = (0..noise.steps).map(|k| inc[k * np + j]).collect();
        let r = skorokhod_map_1d(p.x0, &incs, bands[j])?;
        for k in 0..=noise.steps {
            let prev = |v: &[f64]| if k == 0 { 0.0 } else { v[k - 1] };
            control.add_expand(k, 0, j, r.xi_plus[k] - prev(&r.xi_plus));
            control.add_contract(k, 0, j, r.xi_minus[k] - prev(&r.xi_minus));
        }
    }
    Ok(control)
}

/// How the full cost treats the expected demand revenue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandTreatment {
    /// Uses `E∫e^{−αt}Dⱼ dt = dⱼ/α + αⱼ/α²` and keeps only the pathwise
    /// aggregate `Σᵢ Yⁱʲ − Dʲ` under the integral. Same mean, less noise.
    Analytic,
    /// Integrates the simulated `Σᵢ Yⁱʲ` directly (horizon-truncated).
    Pathwise,
}

/// Trapezoid rule for `∫ e^{−αt} f_k dt` on the grid.
fn discounted_integral(values: impl Iterator<Item = f64>, dt: f64, alpha: f64) -> f64 {
    let vals: Vec<f64> = values
        .enumerate()
        .map(|(k, v)| (-alpha * k as f64 * dt).exp() * v)
        .collect();
    if vals.len() < 2 {
        return 0.0;
    }
    let inner: f64 = vals[1..vals.len() - 1].iter().sum();
    dt * (0.5 * (vals[0] + vals[vals.len() - 1]) + inner)
}

fn averaged_cost(inv: &InvestmentSpec, j: usize) -> Result<RunningCost> {
    RunningCost::average(&inv.costs.iter().map(|r| r[j].clone()).collect::<Vec<_>>())
}

/// Full-model cost of one path: averaged running costs of the aggregate,
/// minus averaged revenue, plus each investor's own adjustment costs, all
/// divided by `M`.
pub fn full_cost(
    inv: &InvestmentSpec,
    noise: &Noise,
    paths: &FullPaths,
    control: &ControlPath,
    treatment: DemandTreatment,
) -> Result<f64> {
    let (m, np) = (inv.investors(), inv.products());
    check_shapes(noise, control, m, np)?;
    let (dt, a) = (noise.dt, inv.discount);
    let n = noise.steps + 1;
    let mf = m as f64;
    let mut total = 0.0;
    for j in 0..np {
        let h = averaged_cost(inv, j)?;
        let x = |k: usize| paths.total_capacity(k, j) - paths.demand(k, j);
        total += discounted_integral((0..n).map(|k| h.value(x(k))), dt, a);
        let r = inv.profit[j] / mf;
        total -= match treatment {
            DemandTreatment::Analytic => {
                r * (discounted_integral((0..n).map(x), dt, a)
                    + inv.demand_init[j] / a
                    + inv.demand_drift[j] / (a * a))
            }
            DemandTreatment::Pathwise => {
                r * discounted_integral((0..n).map(|k| paths.total_capacity(k, j)), dt, a)
            }
        };
        for i in 0..m {
            total += control.discounted_cost(
                i,
                j,
                inv.expand_cost[i][j] / mf,
                inv.contract_cost[i][j] / mf,
                a,
            );
        }
    }
    Ok(total)
}

/// Aggregate-model cost with unit adjustment costs `p*ⱼ/M`, `q*ⱼ/M`.
pub fn reduced_cost(
    inv: &InvestmentSpec,
    red: &CentralReduction,
    noise: &Noise,
    states: &[f64],
    control: &ControlPath,
) -> Result<f64> {
    let np = red.products.len();
    check_shapes(noise, control, 1, np)?;
    let (dt, a) = (noise.dt, inv.discount);
    let n = noise.steps + 1;
    if states.len() != n * np {
        return Err(invalid("state path has the wrong length"));
    }
    let mf = red.investors as f64;
    let mut total = 0.0;
    for (j, p) in red.products.iter().enumerate() {
        let h = averaged_cost(inv, j)?;
        total += discounted_integral((0..n).map(|k| h.value(states[k * np + j])), dt, a);
        total -=
            inv.profit[j] / mf * discounted_integral((0..n).map(|k| states[k * np + j]), dt, a);
        total += control.discounted_cost(0, j, p.p_star / mf, p.q_star / mf, a);
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct TwoPlayerReduction {
    pub problem: ReducedProblem1D,
    /// `K₁ < K₂` on input; the cheaper player is then player 1.
    pub swapped: bool,
    /// Player (0-based) who never acts under the regulator's policy.
    pub idle_player: Option<usize>,
    /// `K₁ = K₂`: the split of control between players is not unique.
    pub non_unique: bool,
}

/// Reduces a two-player difference game to the band problem in `y = x¹ − x²`
/// with `K_eff = min(K₁, K₂)/2`.
pub fn reduce_two_player(
    spec: &GameSpec,
    x0: [f64; 2],
    convention: SigmaConvention,
) -> Result<TwoPlayerReduction> {
    spec.validate()?;
    if spec.players() != 2 {
        return Err(invalid("two-player reduction needs exactly two players"));
    }
    let Payoff::Difference(h) = &spec.payoff else {
        return Err(invalid("two-player reduction needs a payoff h(x1 - x2)"));
    };
    if !h.is_symmetric_about_origin() {
        return Err(invalid("two-player reduction needs h symmetric about 0"));
    }
    if spec.mu.iter().any(|&m| m != 0.0) {
        return Err(invalid("two-player reduction needs zero drifts"));
    }
    if spec.weights[0] != spec.weights[1] {
        return Err(invalid("two-player reduction needs equal welfare weights"));
    }
    for i in 0..2 {
        if spec.k_plus[i] != spec.k_minus[i] {
            return Err(Error::AsymmetricCost {
                k_plus: spec.k_plus[i],
                k_minus: spec.k_minus[i],
            });
        }
    }
    let (k1, k2) = (spec.k_plus[0], spec.k_plus[1]);
    let sigma_tilde = effective_volatility(&spec.sigma, convention)?;
    let problem = ReducedProblem1D::new(
        sigma_tilde,
        spec.rho,
        0.5 * k1.min(k2),
        h.clone(),
        x0[0] - x0[1],
    )?;
    let idle_player = if k1 > k2 {
        Some(0)
    } else if k1 < k2 {
        Some(1)
    } else {
        None
    };
    Ok(TwoPlayerReduction {
        problem,
        swapped: k1 < k2,
        idle_player,
        non_unique: k1 == k2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_by_one(p: [f64; 2]) -> InvestmentSpec {
        let q = RunningCost::quadratic(1.0, 0.0, 0.0).unwrap();
        InvestmentSpec {
            capacity: vec![vec![1.0], vec![2.0]],
            drift: vec![vec![0.1], vec![0.0]],
            volatility: vec![vec![vec![0.5, 0.0]], vec![vec![0.0, 0.5]]],
            expand_cost: vec![vec![p[0]], vec![p[1]]],
            contract_cost: vec![vec![1.0], vec![1.0]],
            costs: vec![vec![q.clone()], vec![q]],
            profit: vec![0.3],
            demand_drift: vec![0.1],
            demand_vol: vec![0.2],
            demand_init: vec![0.5],
            discount: 1.0,
        }
    }

    #[test]
    fn central_reduction_basics() {
        let red = reduce_central(&two_by_one([3.0, 2.0])).unwrap();
        let p = &red.products[0];
        assert_eq!(p.p_star, 2.0);
        assert_eq!(p.i_plus, 1);
        assert_eq!(p.i_minus, 0);
        assert_eq!(p.x0, 2.5);
        assert!((p.drift - 0.0).abs() < 1e-15);
        assert_eq!(p.sigma, vec![0.5, 0.5, -0.2]);
    }

    #[test]
    fn demand_constant_examples() {
        let mut inv = two_by_one([1.0, 1.0]);
        inv.capacity = vec![vec![1.0]];
        inv.drift = vec![vec![0.0]];
        inv.volatility = vec![vec![vec![1.0, 0.0]]];
        inv.expand_cost = vec![vec![1.0]];
        inv.contract_cost = vec![vec![1.0]];
        inv.costs = vec![vec![RunningCost::quadratic(1.0, 0.0, 0.0).unwrap()]];
        inv.profit = vec![1.0];
        inv.demand_drift = vec![0.0];
        inv.demand_init = vec![2.0];
        assert_eq!(demand_constant(&inv), 2.0);
        inv.profit = vec![0.0];
        assert_eq!(demand_constant(&inv), 0.0);
    }

    #[test]
    fn zero_control_lifts_to_zero() {
        let inv = two_by_one([3.0, 2.0]);
        let red = reduce_central(&inv).unwrap();
        let reduced = ControlPath::zeros(vec![0.0, 0.1, 0.2], 1, 1);
        let full = lift_control(&reduced, &red).unwrap();
        assert!(full.is_admissible());
        assert!((0..3)
            .all(|k| (0..2).all(|i| full.expand(k, i, 0) == 0.0 && full.contract(k, i, 0) == 0.0)));
    }

    #[test]
    fn two_player_flags() {
        use crate::model::game::GameSpec;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut spec = GameSpec {
            mu: vec![0.0, 0.0],
            sigma: vec![vec![s, 0.0], vec![0.0, s]],
            rho: 1.0,
            k_plus: vec![2.0, 1.0],
            k_minus: vec![2.0, 1.0],
            weights: vec![0.5, 0.5],
            payoff: Payoff::Difference(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap()),
            benchmark_weights: vec![0.5, 0.5],
        };
        let r = reduce_two_player(&spec, [0.3, 0.1], SigmaConvention::SumOfSquares).unwrap();
        assert_eq!(r.problem.k_eff, 0.5);
        assert_eq!(r.idle_player, Some(0));
        assert!(!r.non_unique);
        assert!((r.problem.x0 - 0.2).abs() < 1e-15);
        let shifted = reduce_two_player(&spec, [1.3, 1.1], SigmaConvention::SumOfSquares).unwrap();
        assert!((shifted.problem.x0 - r.problem.x0).abs() < 1e-15);

        spec.k_plus = vec![1.0, 1.0];
        spec.k_minus = vec![1.0, 1.0];
        let r = reduce_two_player(&spec, [0.0, 0.0], SigmaConvention::SumOfSquares).unwrap();
        assert!(r.non_unique);
        assert_eq!(r.idle_player, None);

        spec.k_minus = vec![1.0, 3.0];
        assert!(matches!(
            reduce_two_player(&spec, [0.0, 0.0], SigmaConvention::SumOfSquares),
            Err(Error::AsymmetricCost { .. })
        ));
    }
}
