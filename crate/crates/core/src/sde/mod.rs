//! Monte Carlo simulation of band-reflected diffusions.

pub mod benchmark;
pub mod cost;
pub mod export;
pub mod rng;
pub mod separable;
pub mod skorokhod;
pub mod two_player;

pub use benchmark::{benchmark_series, simulate_uncontrolled, BenchmarkSeries, UncontrolledBatch};
pub use cost::{estimate_cost, BandPolicy, CostEstimate};
pub use export::{write_paths_csv, write_summary_csv, PathRecord, SummaryRow};
pub use separable::{simulate_separable, SeparableBatch};
pub use skorokhod::{project, skorokhod_map_1d, Reflected};
pub use two_player::{
    compare_policies, simulate_two_player, simulate_two_player_policies, ControlSplit,
    PolicyComparison, TwoPlayerBatch, TwoPlayerOptions, TwoPlayerPolicy,
};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Number of leading paths whose full trajectories are kept.
    pub record: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 12.0,
            n_paths: 10_000,
            seed: 0,
            antithetic: false,
            record: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(invalid(format!(
                "horizon {} must be at least one time step",
                self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(invalid("need at least one path"));
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(invalid("antithetic sampling needs an even number of paths"));
        }
        Ok(())
    }

    /// Number of steps; the simulated horizon `steps·dt` is at least `horizon`.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| k as f64 * self.dt).collect()
    }

    /// Horizon with `e^{−ρT} ≤ 1e−5`.
    pub fn horizon_for(rho: f64) -> f64 {
        (1e5f64).ln() / rho
    }
}

/// Sample mean with its standard error. With antithetic sampling the error
/// comes from the pair averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    /// `None` when there is only one independent sample.
    pub stderr: Option<f64>,
}

pub fn mean_estimate(values: &[f64], antithetic: bool) -> MeanEstimate {
    let pairs: Vec<f64>;
    let samples: &[f64] = if antithetic {
        pairs = values
            .chunks(2)
            .map(|p| p.iter().sum::<f64>() / p.len() as f64)
            .collect();
        &pairs
    } else {
        values
    };
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let stderr = (n > 1).then(|| {
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    });
    MeanEstimate { mean, stderr }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_cover_horizon() {
        let cfg = SimConfig {
            dt: 1e-3,
            horizon: 12.0,
            ..Default::default()
        };
        assert_eq!(cfg.steps(), 12_000);
        let cfg = SimConfig {
            dt: 0.3,
            horizon: 1.0,
            ..Default::default()
        };
        assert_eq!(cfg.steps(), 4);
    }

    #[test]
    fn single_sample_has_no_stderr() {
        assert_eq!(mean_estimate(&[2.0], false).stderr, None);
        let m = mean_estimate(&[1.0, 3.0], false);
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.stderr, Some(1.0));
    }
}
