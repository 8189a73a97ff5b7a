//! Benchmark rate `X̄ = Σ aᵢ Xⁱ` and spread statistics.

use rayon::prelude::*;

use super::export::PathRecord;
use super::rng::NormalStream;
use super::{mean_estimate, MeanEstimate, SimConfig};
use crate::error::{invalid, Result};
use crate::model::game::GameSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSeries {
    pub benchmark: Vec<f64>,
    /// `Σ aᵢ |Xⁱ − X̄|` per time index.
    pub dispersion: Vec<f64>,
    pub mean: f64,
    /// Time variance of `X̄`.
    pub variance: f64,
    /// Time variance of each spread `Xⁱ − X̄`.
    pub spread_variance: Vec<f64>,
}

fn variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// `series[i][k]` is player `i` at time index `k`.
pub fn benchmark_series(series: &[Vec<f64>], weights: &[f64]) -> Result<BenchmarkSeries> {
    if series.is_empty() || series.len() != weights.len() {
        return Err(invalid("need one weight per series"));
    }
    if weights.iter().any(|&a| !(a >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(invalid(
            "benchmark weights must be nonnegative and sum to 1",
        ));
    }
    let len = series[0].len();
    if len == 0 || series.iter().any(|s| s.len() != len) {
        return Err(invalid("series must be nonempty and of equal length"));
    }
    let benchmark: Vec<f64> = (0..len)
        .map(|k| series.iter().zip(weights).map(|(s, a)| a * s[k]).sum())
        .collect();
    let dispersion = (0..len)
        .map(|k| {
            series
                .iter()
                .zip(weights)
                .map(|(s, a)| a * (s[k] - benchmark[k]).abs())
                .sum()
        })
        .collect();
    let spread_variance = series
        .iter()
        .map(|s| variance(s.iter().zip(&benchmark).map(|(x, b)| x - b)))
        .collect();
    Ok(BenchmarkSeries {
        mean: benchmark.iter().sum::<f64>() / len as f64,
        variance: variance(benchmark.iter().copied()),
        benchmark,
        dispersion,
        spread_variance,
    })
}

/// Statistics of the game run without intervention.
#[derive(Debug, Clone)]
pub struct UncontrolledBatch {
    /// Discounted `∫ e^{−ρt} H(X) dt`.
    pub cost: MeanEstimate,
    pub per_path: Vec<f64>,
    /// Path average of the time variance of `X̄`.
    pub benchmark_variance: MeanEstimate,
    /// Path average of the time-averaged dispersion.
    pub dispersion: MeanEstimate,
    pub recorded: Vec<PathRecord>,
}

/// Euler scheme for `dX = μ dt + σ dB` with no controls. Used as a reference
/// for payoffs that have no band solver.
pub fn simulate_uncontrolled(
    spec: &GameSpec,
    x0: &[f64],
    config: &SimConfig,
) -> Result<UncontrolledBatch> {
    spec.validate()?;
    config.validate()?;
    let n = spec.players();
    if x0.len() != n {
        return Err(invalid(format!(
            "initial state has length {}, expected {n}",
            x0.len()
        )));
    }
    let h = spec.joint_cost()?;
    let d = spec.brownian_dim();
    let steps = config.steps();
    let dt = config.dt;
    let sq = dt.sqrt();
    let decay = (-spec.rho * dt).exp();
    let zeros = vec![0.0; n];

    let results = (0..config.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut normals = NormalStream::for_path(config.seed, path, config.antithetic);
            let mut record = (path < config.record).then(|| PathRecord::new(path, n, steps));
            let mut x = x0.to_vec();
            let mut series: Vec<Vec<f64>> = x
                .iter()
                .map(|&v| {
                    let mut s = Vec::with_capacity(steps + 1);
                    s.push(v);
                    s
                })
                .collect();
            let mut db = vec![0.0; d];
            if let Some(r) = record.as_mut() {
                r.push(&x, &zeros, &zeros);
            }
            let (mut disc, mut h_prev, mut running) = (1.0, h.value(&x), 0.0);
            for _ in 0..steps {
                normals.fill(&mut db);
                for i in 0..n {
                    let noise: f64 = spec.sigma[i].iter().zip(&db).map(|(s, z)| s * z).sum();
                    x[i] += spec.mu[i] * dt + sq * noise;
                    series[i].push(x[i]);
                }
                let disc_next = disc * decay;
                let h_next = h.value(&x);
                running += disc * h_prev + disc_next * h_next;
                disc = disc_next;
                h_prev = h_next;
                if let Some(r) = record.as_mut() {
                    r.push(&x, &zeros, &zeros);
                }
            }
            let b = benchmark_series(&series, &spec.benchmark_weights)?;
            let dispersion = b.dispersion.iter().sum::<f64>() / b.dispersion.len() as f64;
            Ok((0.5 * dt * running, b.variance, dispersion, record))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_path = Vec::with_capacity(results.len());
    let (mut var, mut disp, mut recorded) = (Vec::new(), Vec::new(), Vec::new());
    for (c, v, q, r) in results {
        per_path.push(c);
        var.push(v);
        disp.push(q);
        recorded.extend(r);
    }
    Ok(UncontrolledBatch {
        cost: mean_estimate(&per_path, config.antithetic),
        benchmark_variance: mean_estimate(&var, config.antithetic),
        dispersion: mean_estimate(&disp, config.antithetic),
        per_path,
        recorded,
    })
}
