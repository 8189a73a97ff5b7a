//! Sampled checks of the standing assumptions on a joint running cost:
//! nonnegativity, quadratic growth, the local Lipschitz bound, convexity and
//! two-sided directional curvature bounds.

use std::fmt;

use crate::error::Result;
use crate::model::game::GameSpec;
use crate::model::joint::JointCost;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    Nonnegative,
    QuadraticGrowth,
    LocalLipschitz,
    Convex,
    CurvatureLower,
    CurvatureUpper,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assumption::Nonnegative => "nonnegative",
            Assumption::QuadraticGrowth => "quadratic_growth",
            Assumption::LocalLipschitz => "local_lipschitz",
            Assumption::Convex => "convex",
            Assumption::CurvatureLower => "curvature_lower_bound",
            Assumption::CurvatureUpper => "curvature_upper_bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub passed: bool,
    /// The statistic the verdict is based on (a minimum, a ratio, ...).
    pub statistic: f64,
    /// Sample point where the statistic is attained.
    pub witness: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, a: Assumption) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    /// Inner sampling box is `[−radius, radius]ᴺ`; the outer one is twice as wide.
    pub radius: f64,
    /// Upper bound on grid points per box; points per axis shrink with `N`.
    pub max_points: usize,
    /// Smallest acceptable Hessian eigenvalue.
    pub curvature_floor: f64,
    /// Allowed growth of the fitted constants from the inner to the outer box.
    pub envelope_slack: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            radius: 5.0,
            max_points: 20_000,
            curvature_floor: 1e-10,
            envelope_slack: 1.5,
        }
    }
}

struct Sample {
    x: Vec<f64>,
    value: f64,
    grad_norm: f64,
    eig_min: f64,
    eig_max: f64,
}

fn grid(dim: usize, radius: f64, max_points: usize) -> Vec<Vec<f64>> {
    let mut per_axis = 2usize;
    while (per_axis + 1)
        .checked_pow(dim as u32)
        .is_some_and(|n| n <= max_points)
    {
        per_axis += 1;
    }
    let per_axis = per_axis.max(3);
    let coord = |k: usize| -radius + 2.0 * radius * k as f64 / (per_axis - 1) as f64;
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    coord(k)
                })
                .collect()
        })
        .collect()
}

fn sample(h: &dyn JointCost, points: Vec<Vec<f64>>) -> Vec<Sample> {
    points
        .into_iter()
        .map(|x| {
            let value = h.value(&x);
            let grad_norm = h.gradient(&x).iter().map(|g| g * g).sum::<f64>().sqrt();
            let eig = h.hessian(&x).symmetric_eigenvalues();
            Sample {
                value,
                grad_norm,
                eig_min: eig.min(),
                eig_max: eig.max(),
                x,
            }
        })
        .collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn extreme<F: Fn(&Sample) -> f64>(samples: &[Sample], f: F, largest: bool) -> (f64, &Sample) {
    let mut best = &samples[0];
    let mut best_v = f(best);
    for s in &samples[1..] {
        let v = f(s);
        if (largest && v > best_v) || (!largest && v < best_v) {
            best = s;
            best_v = v;
        }
    }
    (best_v, best)
}

/// Samples `H`, its gradient and Hessian on an inner and an outer box and
/// reports a verdict with a witness point for every assumption.
pub fn validate_assumptions(h: &dyn JointCost, opts: SamplingOptions) -> AssumptionReport {
    let dim = h.dim();
    let inner = sample(h, grid(dim, opts.radius, opts.max_points));
    let outer = sample(h, grid(dim, 2.0 * opts.radius, opts.max_points));
    let all: Vec<&Sample> = inner.iter().chain(&outer).collect();
    let scale = all.iter().map(|s| s.value.abs()).fold(1.0, f64::max);
    let mut checks = Vec::new();

    let (min_h, at) = extreme(&outer, |s| s.value, false);
    let (min_in, at_in) = extreme(&inner, |s| s.value, false);
    let (min_h, at) = if min_in < min_h {
        (min_in, at_in)
    } else {
        (min_h, at)
    };
    checks.push(AssumptionCheck {
        assumption: Assumption::Nonnegative,
        passed: min_h >= -1e-12 * scale,
        statistic: min_h,
        witness: at.x.clone(),
        detail: format!("min H = {min_h:e}"),
    });

    let growth = |s: &Sample| s.value / (1.0 + norm(&s.x).powi(2));
    let (c_in, _) = extreme(&inner, growth, true);
    let (c_out, at) = extreme(&outer, growth, true);
    checks.push(AssumptionCheck {
        assumption: Assumption::QuadraticGrowth,
        passed: c_out <= opts.envelope_slack * c_in + 1e-12,
        statistic: c_out,
        witness: at.x.clone(),
        detail: format!("H/(1+|x|^2): inner max {c_in:e}, outer max {c_out:e}"),
    });

    let lip = |s: &Sample| s.grad_norm / (1.0 + norm(&s.x));
    let (g_in, _) = extreme(&inner, lip, true);
    let (g_out, at) = extreme(&outer, lip, true);
    checks.push(AssumptionCheck {
        assumption: Assumption::LocalLipschitz,
        passed: g_out <= opts.envelope_slack * g_in + 1e-12,
        statistic: g_out,
        witness: at.x.clone(),
        detail: format!("|grad H|/(1+|x|): inner max {g_in:e}, outer max {g_out:e}"),
    });

    let (eig_lo, at_lo) = {
        let (a, sa) = extreme(&inner, |s| s.eig_min, false);
        let (b, sb) = extreme(&outer, |s| s.eig_min, false);
        if a <= b {
            (a, sa)
        } else {
            (b, sb)
        }
    };
    let eig_scale = all.iter().map(|s| s.eig_max.abs()).fold(1.0, f64::max);
    checks.push(AssumptionCheck {
        assumption: Assumption::Convex,
        passed: eig_lo >= -1e-9 * eig_scale,
        statistic: eig_lo,
        witness: at_lo.x.clone(),
        detail: format!("min Hessian eigenvalue {eig_lo:e}"),
    });
    checks.push(AssumptionCheck {
        assumption: Assumption::CurvatureLower,
        passed: eig_lo > opts.curvature_floor,
        statistic: eig_lo,
        witness: at_lo.x.clone(),
        detail: format!(
            "min Hessian eigenvalue {eig_lo:e} vs floor {:e}",
            opts.curvature_floor
        ),
    });

    let (hi_in, _) = extreme(&inner, |s| s.eig_max, true);
    let (hi_out, at) = extreme(&outer, |s| s.eig_max, true);
    checks.push(AssumptionCheck {
        assumption: Assumption::CurvatureUpper,
        passed: hi_out.is_finite() && hi_out <= opts.envelope_slack * hi_in + 1e-12,
        statistic: hi_out,
        witness: at.x.clone(),
        detail: format!("max Hessian eigenvalue: inner {hi_in:e}, outer {hi_out:e}"),
    });

    AssumptionReport { checks }
}

/// [`validate_assumptions`] on the joint cost of a game.
pub fn validate_game_assumptions(
    spec: &GameSpec,
    opts: SamplingOptions,
) -> Result<AssumptionReport> {
    let h = spec.joint_cost()?;
    Ok(validate_assumptions(h.as_ref(), opts))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::joint::{FnJointCost, InterbankCost};

    #[test]
    fn interbank_passes_everything() {
        let h = InterbankCost::strict(
            vec![1.0, 0.5, 2.0],
            vec![0.2, 0.3, 0.1],
            vec![0.3, 0.3, 0.4],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let r = validate_assumptions(&h, SamplingOptions::default());
        assert!(r.all_passed(), "{r:#?}");
    }

    #[test]
    fn quartic_fails_upper_curvature() {
        let h = FnJointCost::new(1, Arc::new(|x: &[f64]| x[0].powi(4)));
        let r = validate_assumptions(&h, SamplingOptions::default());
        let upper = r.get(Assumption::CurvatureUpper).unwrap();
        assert!(!upper.passed);
        assert!(upper.witness[0].abs() >= 9.9);
        assert!(r.get(Assumption::Nonnegative).unwrap().passed);
    }

    #[test]
    fn zero_cost_fails_lower_curvature() {
        let h = FnJointCost::new(2, Arc::new(|_: &[f64]| 0.0));
        let r = validate_assumptions(&h, SamplingOptions::default());
        assert!(!r.get(Assumption::CurvatureLower).unwrap().passed);
        assert!(r.get(Assumption::Convex).unwrap().passed);
    }
}
