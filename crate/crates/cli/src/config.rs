//! Run configuration: TOML schema and conversion into solver inputs.

use serde::{Deserialize, Serialize};

use sck_core::model::cost::RunningCost;
use sck_core::model::game::{GameSpec, InvestmentSpec, Payoff, SigmaConvention};
use sck_core::sde::{ControlSplit, SimConfig};
use sck_core::thresholds::ThresholdOptions;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: String,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Single state `dY = μ dt + σ dB` with costs `K⁺`, `K⁻`.
    OneD {
        sigma: f64,
        rho: f64,
        k_plus: f64,
        k_minus: f64,
        #[serde(default)]
        mu: f64,
        #[serde(default)]
        x0: f64,
        cost: CostConfig,
    },
    /// Two players with payoff `h(x¹ − x²)`.
    TwoPlayer {
        #[serde(default = "zero_pair")]
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
        rho: f64,
        k_plus: Vec<f64>,
        k_minus: Vec<f64>,
        #[serde(default = "half_pair")]
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        benchmark_weights: Option<Vec<f64>>,
        #[serde(default = "zero_pair")]
        x0: Vec<f64>,
        cost: CostConfig,
    },
    /// Investors and products against stochastic demand.
    Investment {
        capacity: Vec<Vec<f64>>,
        drift: Vec<Vec<f64>>,
        volatility: Vec<Vec<Vec<f64>>>,
        expand_cost: Vec<Vec<f64>>,
        contract_cost: Vec<Vec<f64>>,
        costs: Vec<Vec<CostConfig>>,
        profit: Vec<f64>,
        demand_drift: Vec<f64>,
        demand_vol: Vec<f64>,
        demand_init: Vec<f64>,
        discount: f64,
    },
    /// General N-player game.
    Game {
        mu: Vec<f64>,
        sigma: Vec<Vec<f64>>,
        rho: f64,
        k_plus: Vec<f64>,
        k_minus: Vec<f64>,
        weights: Vec<f64>,
        benchmark_weights: Vec<f64>,
        x0: Vec<f64>,
        payoff: PayoffConfig,
    },
}

fn zero_pair() -> Vec<f64> {
    vec![0.0, 0.0]
}

fn half_pair() -> Vec<f64> {
    vec![0.5, 0.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostConfig {
    /// `curvature · (y − center)² + offset`.
    Quadratic {
        curvature: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `a·y² + b·(√(1+y²) − 1)`.
    SoftenedQuadratic { a: f64, b: f64 },
}

impl CostConfig {
    pub fn build(&self) -> Result<RunningCost, CliError> {
        match *self {
            CostConfig::Quadratic {
                curvature,
                center,
                offset,
            } => RunningCost::quadratic(curvature, center, offset),
            CostConfig::SoftenedQuadratic { a, b } => RunningCost::softened_quadratic(a, b),
        }
        .map_err(CliError::config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffConfig {
    Interbank { kappa: Vec<f64>, nu: Vec<f64> },
    Difference { cost: CostConfig },
    Separable { costs: Vec<CostConfig> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    SumOfSquares,
    DriverNorm,
}

impl From<Convention> for SigmaConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::SumOfSquares => SigmaConvention::SumOfSquares,
            Convention::DriverNorm => SigmaConvention::DriverNorm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Shared,
    SinglePlayer,
}

impl From<Split> for ControlSplit {
    fn from(s: Split) -> Self {
        match s {
            Split::Shared => ControlSplit::Shared,
            Split::SinglePlayer => ControlSplit::SinglePlayer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Threshold residual tolerance.
    pub tol: f64,
    /// Policy-iteration residual tolerance.
    pub fd_tol: f64,
    pub max_iter: usize,
    /// Nodes of the 1-D grid (finest `verify` level is `levels − 1` doublings above).
    pub grid: usize,
    pub half_width: f64,
    pub levels: usize,
    /// Nodes per axis of the 2-D grid.
    pub grid_2d: usize,
    pub fd_fallback: bool,
    pub sigma_convention: Convention,
    pub split: Split,
    /// Points of the exported value grid.
    pub value_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            fd_tol: 1e-10,
            max_iter: 500,
            grid: 1601,
            half_width: 4.0,
            levels: 3,
            grid_2d: 101,
            fd_fallback: true,
            sigma_convention: Convention::SumOfSquares,
            split: Split::Shared,
            value_points: 401,
        }
    }
}

impl SolverConfig {
    pub fn thresholds(&self) -> ThresholdOptions {
        ThresholdOptions {
            tol: self.tol,
            ..ThresholdOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub paths: usize,
    pub dt: f64,
    /// Defaults to `ln(1e5)/ρ` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub antithetic: bool,
    /// Leading paths written to `paths.csv`.
    pub record: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            paths: 10_000,
            dt: 1e-3,
            horizon: None,
            antithetic: false,
            record: 4,
        }
    }
}

impl SimulationConfig {
    pub fn sim_config(&self, seed: u64, rho: f64) -> SimConfig {
        SimConfig {
            dt: self.dt,
            horizon: self.horizon.unwrap_or_else(|| SimConfig::horizon_for(rho)),
            n_paths: self.paths,
            seed,
            antithetic: self.antithetic,
            record: self.record.min(self.paths),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Both intervention costs of every player.
    K,
    Sigma,
    Rho,
    /// Quadratic curvature (or `a` of the softened quadratic).
    Curvature,
}

/// Values given on the command line or through `SCK_*` variables.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// `--tol` sets both the threshold and the policy-iteration tolerance.
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(paths) = o.paths {
            self.simulation.paths = paths;
        }
        if let Some(dt) = o.dt {
            self.simulation.dt = dt;
        }
        if let Some(grid) = o.grid {
            self.solver.grid = grid;
        }
        if let Some(tol) = o.tol {
            self.solver.tol = tol;
            self.solver.fd_tol = tol;
        }
        self.check()
    }

    fn check(&self) -> Result<(), CliError> {
        let s = &self.solver;
        if !(s.tol > 0.0) || !(s.fd_tol > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if s.grid < 5 || s.grid_2d < 5 {
            return Err(CliError::Config("grids need at least 5 nodes".into()));
        }
        if s.levels < 3 {
            return Err(CliError::Config(
                "verify needs at least 3 grid levels".into(),
            ));
        }
        if !(s.half_width > 0.0) {
            return Err(CliError::Config("half_width must be positive".into()));
        }
        if s.value_points < 2 {
            return Err(CliError::Config("value_points must be at least 2".into()));
        }
        let m = &self.simulation;
        if m.paths == 0 {
            return Err(CliError::Config(
                "simulation needs at least one path".into(),
            ));
        }
        if !(m.dt > 0.0) {
            return Err(CliError::Config("simulation dt must be positive".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(CliError::Config("sweep needs at least one value".into()));
            }
        }
        self.problem.check()
    }
}

/// Problem data in solver form.
pub enum Model {
    OneD(OneD),
    Game { spec: GameSpec, x0: Vec<f64> },
    Investment(InvestmentSpec),
}

#[derive(Debug, Clone)]
pub struct OneD {
    pub sigma: f64,
    pub rho: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub mu: f64,
    pub x0: f64,
    pub cost: RunningCost,
}

impl ProblemConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemConfig::OneD { .. } => "one_d",
            ProblemConfig::TwoPlayer { .. } => "two_player",
            ProblemConfig::Investment { .. } => "investment",
            ProblemConfig::Game { .. } => "game",
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            ProblemConfig::OneD { rho, .. }
            | ProblemConfig::TwoPlayer { rho, .. }
            | ProblemConfig::Game { rho, .. } => *rho,
            ProblemConfig::Investment { discount, .. } => *discount,
        }
    }

    fn check(&self) -> Result<(), CliError> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Model, CliError> {
        match self {
            ProblemConfig::OneD {
                sigma,
                rho,
                k_plus,
                k_minus,
                mu,
                x0,
                cost,
            } => {
                if !(*sigma > 0.0) || !(*rho > 0.0) {
                    return Err(CliError::Config("sigma and rho must be positive".into()));
                }
                if !(*k_plus > 0.0) || !(*k_minus > 0.0) {
                    return Err(CliError::Config(
                        "k_plus and k_minus must be positive".into(),
                    ));
                }
                if !mu.is_finite() || !x0.is_finite() {
                    return Err(CliError::Config("mu and x0 must be finite".into()));
                }
                Ok(Model::OneD(OneD {
                    sigma: *sigma,
                    rho: *rho,
                    k_plus: *k_plus,
                    k_minus: *k_minus,
                    mu: *mu,
                    x0: *x0,
                    cost: cost.build()?,
                }))
            }
            ProblemConfig::TwoPlayer {
                mu,
                sigma,
                rho,
                k_plus,
                k_minus,
                weights,
                benchmark_weights,
                x0,
                cost,
            } => {
                let spec = GameSpec {
                    mu: mu.clone(),
                    sigma: sigma.clone(),
                    rho: *rho,
                    k_plus: k_plus.clone(),
                    k_minus: k_minus.clone(),
                    weights: weights.clone(),
                    payoff: Payoff::Difference(cost.build()?),
                    benchmark_weights: benchmark_weights.clone().unwrap_or_else(half_pair),
                };
                if spec.players() != 2 {
                    return Err(CliError::Config(format!(
                        "two_player needs mu of length 2, got {}",
                        spec.players()
                    )));
                }
                game_model(spec, x0)
            }
            ProblemConfig::Game {
                mu,
                sigma,
                rho,
                k_plus,
                k_minus,
                weights,
                benchmark_weights,
                x0,
                payoff,
            } => {
                let payoff = match payoff {
                    PayoffConfig::Interbank { kappa, nu } => Payoff::Interbank {
                        kappa: kappa.clone(),
                        nu: nu.clone(),
                    },
                    PayoffConfig::Difference { cost } => Payoff::Difference(cost.build()?),
                    PayoffConfig::Separable { costs } => Payoff::Separable(
                        costs
                            .iter()
                            .map(CostConfig::build)
                            .collect::<Result<_, _>>()?,
                    ),
                };
                let spec = GameSpec {
                    mu: mu.clone(),
                    sigma: sigma.clone(),
                    rho: *rho,
                    k_plus: k_plus.clone(),
                    k_minus: k_minus.clone(),
                    weights: weights.clone(),
                    payoff,
                    benchmark_weights: benchmark_weights.clone(),
                };
                game_model(spec, x0)
            }
            ProblemConfig::Investment {
                capacity,
                drift,
                volatility,
                expand_cost,
                contract_cost,
                costs,
                profit,
                demand_drift,
                demand_vol,
                demand_init,
                discount,
            } => {
                let inv = InvestmentSpec {
                    capacity: capacity.clone(),
                    drift: drift.clone(),
                    volatility: volatility.clone(),
                    expand_cost: expand_cost.clone(),
                    contract_cost: contract_cost.clone(),
                    costs: costs
                        .iter()
                        .map(|row| row.iter().map(CostConfig::build).collect())
                        .collect::<Result<_, _>>()?,
                    profit: profit.clone(),
                    demand_drift: demand_drift.clone(),
                    demand_vol: demand_vol.clone(),
                    demand_init: demand_init.clone(),
                    discount: *discount,
                };
                inv.validate().map_err(CliError::config)?;
                Ok(Model::Investment(inv))
            }
        }
    }
}

fn game_model(spec: GameSpec, x0: &[f64]) -> Result<Model, CliError> {
    spec.validate().map_err(CliError::config)?;
    if x0.len() != spec.players() {
        return Err(CliError::Config(format!(
            "x0 has length {}, expected {}",
            x0.len(),
            spec.players()
        )));
    }
    Ok(Model::Game {
        spec,
        x0: x0.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"
seed = 7
out = "o"

[problem]
kind = "two_player"
sigma = [[0.7071067811865476, 0.0], [0.0, 0.7071067811865476]]
rho = 1.0
k_plus = [1.0, 1.0]
k_minus = [1.0, 1.0]

[problem.cost]
type = "quadratic"
curvature = 1.0
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(DEMO).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.simulation, SimulationConfig::default());
        assert!(matches!(cfg.problem.build().unwrap(), Model::Game { .. }));
    }

    #[test]
    fn parse_serialize_parse_is_identity() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
            let cfg = RunConfig::parse(&text).unwrap();
            assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
            seen += 1;
        }
        assert_eq!(seen, 4);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = DEMO.replace("rho = 1.0", "rho = 1.0\nrh0 = 2.0");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Schema(_))));
    }

    #[test]
    fn overrides_take_effect() {
        let mut cfg = RunConfig::parse(DEMO).unwrap();
        let o = Overrides {
            tol: Some(1e-9),
            paths: Some(10),
            ..Default::default()
        };
        cfg.apply(&o).unwrap();
        assert_eq!(cfg.solver.fd_tol, 1e-9);
        assert_eq!(cfg.simulation.paths, 10);
        assert_eq!(cfg.seed, 7);
    }
}
