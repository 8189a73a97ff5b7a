//! Problem data: the N-player game, the investment model and the reduced
//! one-dimensional band problem.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::model::cost::RunningCost;
use crate::model::joint::{DifferenceCost, InterbankCost, JointCost, SeparableCost};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// How the volatility of a reduced one-dimensional state is formed from
/// the volatility rows of the players (or investors).
///
/// * `SumOfSquares`: `σ̃ = √(Σᵢ Σⱼ σᵢⱼ²)`.
/// * `DriverNorm`: the norm of the vector that actually drives the reduced
///   state, `‖σ¹ − σ²‖₂` for a two-player difference.
///
/// They agree when the rows are orthogonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaConvention {
    #[default]
    SumOfSquares,
    DriverNorm,
}

/// Effective volatility of a set of volatility rows.
///
/// `DriverNorm` needs exactly two rows (the difference `σ¹ − σ²`) or a single
/// row (its norm).
pub fn effective_volatility(rows: &[Vec<f64>], convention: SigmaConvention) -> Result<f64> {
    if rows.is_empty() {
        return Err(invalid("no volatility rows"));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(invalid(
            "volatility rows must be nonempty and of equal length",
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("volatility entries must be finite"));
    }
    let s = match convention {
        SigmaConvention::SumOfSquares => rows.iter().flatten().map(|v| v * v).sum::<f64>().sqrt(),
        SigmaConvention::DriverNorm => match rows {
            [one] => one.iter().map(|v| v * v).sum::<f64>().sqrt(),
            [a, b] => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            _ => {
                return Err(invalid(
                    "driver-norm convention takes one or two volatility rows",
                ));
            }
        },
    };
    if s == 0.0 {
        return Err(Error::DegenerateDiffusion);
    }
    Ok(s)
}

/// Running payoff shared by the players.
#[derive(Debug, Clone)]
pub enum Payoff {
    /// `h(x¹ − x²)` for two players.
    Difference(RunningCost),
    /// Benchmark-deviation payoff with per-bank `κᵢ`, `νᵢ`.
    Interbank { kappa: Vec<f64>, nu: Vec<f64> },
    /// `Σ hᵢ(xⁱ)`.
    Separable(Vec<RunningCost>),
}

/// Full N-player game data.
#[derive(Debug, Clone)]
pub struct GameSpec {
    pub mu: Vec<f64>,
    /// `N × D` volatility matrix; row `i` is `σⁱ`.
    pub sigma: Vec<Vec<f64>>,
    pub rho: f64,
    pub k_plus: Vec<f64>,
    pub k_minus: Vec<f64>,
    /// Welfare weights `Lᵢ`.
    pub weights: Vec<f64>,
    pub payoff: Payoff,
    /// Benchmark weights `aᵢ`.
    pub benchmark_weights: Vec<f64>,
}

impl GameSpec {
    pub fn players(&self) -> usize {
        self.mu.len()
    }

    pub fn brownian_dim(&self) -> usize {
        self.sigma.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.players();
        if n == 0 {
            return Err(invalid("game needs at least one player"));
        }
        for (name, len) in [
            ("sigma", self.sigma.len()),
            ("k_plus", self.k_plus.len()),
            ("k_minus", self.k_minus.len()),
            ("weights", self.weights.len()),
            ("benchmark_weights", self.benchmark_weights.len()),
        ] {
            if len != n {
                return Err(invalid(format!("{name} has length {len}, expected {n}")));
            }
        }
        let d = self.brownian_dim();
        if d == 0 || self.sigma.iter().any(|r| r.len() != d) {
            return Err(invalid(
                "volatility rows must be nonempty and of equal length",
            ));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(invalid(format!(
                "discount rate must be positive, got {}",
                self.rho
            )));
        }
        if self
            .k_plus
            .iter()
            .chain(&self.k_minus)
            .any(|&k| !(k > 0.0) || !k.is_finite())
        {
            return Err(invalid("intervention costs must be positive and finite"));
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(invalid("drifts must be finite"));
        }
        if self.weights.iter().any(|&l| !(l > 0.0)) {
            return Err(invalid("welfare weights must be positive"));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(invalid("welfare weights must sum to 1"));
        }
        if self.benchmark_weights.iter().any(|&a| !(a >= 0.0))
            || (self.benchmark_weights.iter().sum::<f64>() - 1.0).abs() > WEIGHT_SUM_TOL
        {
            return Err(invalid(
                "benchmark weights must be nonnegative and sum to 1",
            ));
        }
        let lambda = self.min_covariance_eigenvalue();
        if !(lambda > 1e-12) {
            return Err(invalid(format!(
                "sigma sigma^T must be uniformly elliptic; smallest eigenvalue is {lambda:e}"
            )));
        }
        match &self.payoff {
            Payoff::Difference(_) if n != 2 => {
                return Err(invalid("difference payoff needs exactly two players"));
            }
            Payoff::Interbank { kappa, nu } => {
                InterbankCost::strict(
                    kappa.clone(),
                    nu.clone(),
                    self.benchmark_weights.clone(),
                    self.weights.clone(),
                )?;
                if kappa.len() != n {
                    return Err(invalid("interbank kappa/nu must have one entry per player"));
                }
            }
            Payoff::Separable(costs) if costs.len() != n => {
                return Err(invalid("separable payoff needs one cost per player"));
            }
            _ => {}
        }
        Ok(())
    }

    /// `σσᵀ` as an `N × N` matrix.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.players();
        DMatrix::from_fn(n, n, |i, j| {
            self.sigma[i]
                .iter()
                .zip(&self.sigma[j])
                .map(|(a, b)| a * b)
                .sum()
        })
    }

    pub fn min_covariance_eigenvalue(&self) -> f64 {
        self.covariance().symmetric_eigenvalues().min()
    }

    pub fn joint_cost(&self) -> Result<Arc<dyn JointCost>> {
        Ok(match &self.payoff {
            Payoff::Difference(h) => Arc::new(DifferenceCost(h.clone())),
            Payoff::Interbank { kappa, nu } => Arc::new(InterbankCost::new(
                kappa.clone(),
                nu.clone(),
                self.benchmark_weights.clone(),
                self.weights.clone(),
            )?),
            Payoff::Separable(costs) => Arc::new(SeparableCost(costs.clone())),
        })
    }
}

/// M investors producing `Nprod` products against stochastic demand.
/// Per-(investor, product) arrays are indexed `[i][j]`.
#[derive(Debug, Clone)]
pub struct InvestmentSpec {
    pub capacity: Vec<Vec<f64>>,
    pub drift: Vec<Vec<f64>>,
    /// Volatility row of each capacity against the investors' Brownian motion.
    pub volatility: Vec<Vec<Vec<f64>>>,
    pub expand_cost: Vec<Vec<f64>>,
    pub contract_cost: Vec<Vec<f64>>,
    /// Separable running costs `h_{i,j}`.
    pub costs: Vec<Vec<RunningCost>>,
    /// Unit profits `r_j`.
    pub profit: Vec<f64>,
    pub demand_drift: Vec<f64>,
    pub demand_vol: Vec<f64>,
    pub demand_init: Vec<f64>,
    /// Discount rate `α`.
    pub discount: f64,
}

impl InvestmentSpec {
    pub fn investors(&self) -> usize {
        self.capacity.len()
    }

    pub fn products(&self) -> usize {
        self.profit.len()
    }

    pub fn brownian_dim(&self) -> usize {
        self.volatility
            .first()
            .and_then(|r| r.first())
            .map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.investors();
        let np = self.products();
        if m == 0 || np == 0 {
            return Err(invalid(
                "investment spec needs at least one investor and one product",
            ));
        }
        let d = self.brownian_dim();
        let grids: [(&str, usize, Vec<usize>); 5] = [
            (
                "capacity",
                self.capacity.len(),
                self.capacity.iter().map(Vec::len).collect(),
            ),
            (
                "drift",
                self.drift.len(),
                self.drift.iter().map(Vec::len).collect(),
            ),
            (
                "volatility",
                self.volatility.len(),
                self.volatility.iter().map(Vec::len).collect(),
            ),
            (
                "expand_cost",
                self.expand_cost.len(),
                self.expand_cost.iter().map(Vec::len).collect(),
            ),
            (
                "contract_cost",
                self.contract_cost.len(),
                self.contract_cost.iter().map(Vec::len).collect(),
            ),
        ];
        for (name, rows, cols) in grids {
            if rows != m || cols.iter().any(|&c| c != np) {
                return Err(invalid(format!("{name} must be {m} x {np}")));
            }
        }
        if self.costs.len() != m || self.costs.iter().any(|r| r.len() != np) {
            return Err(invalid(format!("costs must be {m} x {np}")));
        }
        for (name, len) in [
            ("demand_drift", self.demand_drift.len()),
            ("demand_vol", self.demand_vol.len()),
            ("demand_init", self.demand_init.len()),
        ] {
            if len != np {
                return Err(invalid(format!("{name} has length {len}, expected {np}")));
            }
        }
        if d == 0 {
            return Err(invalid("volatility rows must be nonempty"));
        }
        for (i, rows) in self.volatility.iter().enumerate() {
            for (j, row) in rows.iter().enumerate() {
                if row.len() != d {
                    return Err(invalid("volatility rows must share one Brownian dimension"));
                }
                if !(row.iter().map(|v| v * v).sum::<f64>() > 0.0) {
                    return Err(invalid(format!("volatility row ({i},{j}) has zero norm")));
                }
            }
        }
        if self
            .expand_cost
            .iter()
            .chain(&self.contract_cost)
            .flatten()
            .any(|&p| !(p > 0.0))
        {
            return Err(invalid("expansion and contraction costs must be positive"));
        }
        if !(self.discount > 0.0) {
            return Err(invalid("discount rate must be positive"));
        }
        if self.demand_vol.iter().any(|&g| !(g >= 0.0)) {
            return Err(invalid("demand volatilities must be nonnegative"));
        }
        Ok(())
    }
}

/// One-dimensional band problem: state `y`, volatility `σ̃`, proportional
/// cost `K_eff` on both sides.
#[derive(Debug, Clone)]
pub struct ReducedProblem1D {
    pub sigma_tilde: f64,
    pub rho: f64,
    pub k_eff: f64,
    pub cost: RunningCost,
    pub x0: f64,
}

impl ReducedProblem1D {
    pub fn new(sigma_tilde: f64, rho: f64, k_eff: f64, cost: RunningCost, x0: f64) -> Result<Self> {
        if !(sigma_tilde > 0.0) {
            return Err(Error::DegenerateDiffusion);
        }
        if !(rho > 0.0) {
            return Err(invalid("discount rate must be positive"));
        }
        if !(k_eff > 0.0) {
            return Err(invalid("effective cost must be positive"));
        }
        Ok(Self {
            sigma_tilde,
            rho,
            k_eff,
            cost,
            x0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_rows_agree_across_conventions() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let a = effective_volatility(&rows, SigmaConvention::SumOfSquares).unwrap();
        let b = effective_volatility(&rows, SigmaConvention::DriverNorm).unwrap();
        assert_eq!(a, 2f64.sqrt());
        assert_eq!(b, 2f64.sqrt());
        assert_eq!(
            effective_volatility(&[vec![0.7, 0.0]], SigmaConvention::SumOfSquares).unwrap(),
            0.7
        );
    }

    #[test]
    fn parallel_rows_are_degenerate_under_driver_norm() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert_eq!(
            effective_volatility(&rows, SigmaConvention::SumOfSquares).unwrap(),
            2f64.sqrt()
        );
        assert!(matches!(
            effective_volatility(&rows, SigmaConvention::DriverNorm),
            Err(Error::DegenerateDiffusion)
        ));
    }

    fn demo_game() -> GameSpec {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        GameSpec {
            mu: vec![0.0, 0.0],
            sigma: vec![vec![s, 0.0], vec![0.0, s]],
            rho: 1.0,
            k_plus: vec![1.0, 1.0],
            k_minus: vec![1.0, 1.0],
            weights: vec![0.5, 0.5],
            payoff: Payoff::Difference(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap()),
            benchmark_weights: vec![0.5, 0.5],
        }
    }

    #[test]
    fn game_validation() {
        let g = demo_game();
        g.validate().unwrap();

        let mut bad = g.clone();
        bad.weights = vec![0.6, 0.6];
        assert!(bad.validate().is_err());

        let mut bad = g.clone();
        bad.sigma = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(bad.validate().is_err());

        let mut bad = g.clone();
        bad.k_plus = vec![1.0];
        assert!(bad.validate().is_err());

        let mut bad = g;
        bad.rho = 0.0;
        assert!(bad.validate().is_err());
    }
}
