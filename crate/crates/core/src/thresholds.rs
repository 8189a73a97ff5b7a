//! Free-boundary thresholds of the symmetric band problems.
//!
//! The half-width `c` of the optimal band solves the smooth-pasting equation
//!
//! ```text
//! F(x) = (p′(x) − K_eff)/p″(x) − (σ̃/√(2ρ))·tanh(√(2ρ)x/σ̃) = 0,
//! ```
//!
//! where `p` is the resolvent of the running cost. Every instantiation (the
//! regulator's `K/2`, the Nash `K`, a product's `k*/M`) only changes `K_eff`.

use crate::error::{invalid, Error, Result};
use crate::model::cost::RunningCost;
use crate::model::game::{effective_volatility, InvestmentSpec, SigmaConvention};
use crate::model::resolvent::Resolvent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    /// Required `|F(c)|`.
    pub tol: f64,
    /// Bracket width below which refinement stops.
    pub width_tol: f64,
    pub max_doublings: usize,
    pub max_iterations: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            width_tol: 1e-12,
            max_doublings: 64,
            max_iterations: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSolution {
    pub c: f64,
    pub k_eff: f64,
    pub residual: f64,
    /// Final bracket with `F(lo) < 0 < F(hi)`.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Curvature floor below which `p″` counts as degenerate: half the lower
/// bound implied by the running cost.
fn curvature_floor(res: &Resolvent) -> f64 {
    0.5 * res.cost().curvature_bounds().0 / res.rho()
}

/// The smooth-pasting residual `F(x)`.
pub fn smoothing_residual(x: f64, res: &Resolvent, k_eff: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid(format!("threshold residual needs x >= 0, got {x}")));
    }
    let pt = res.eval(x)?;
    let floor = curvature_floor(res);
    if !(pt.d2p >= floor) {
        return Err(Error::DegenerateCurvature {
            x,
            value: pt.d2p,
            floor,
        });
    }
    let s = res.sigma() / (2.0 * res.rho()).sqrt();
    Ok((pt.dp - k_eff) / pt.d2p - s * (x / s).tanh())
}

/// Solves `F(c) = 0` for the unique positive root.
///
/// The bracket starts at `[0, max(K_eff, σ̃/√(2ρ))]` and its upper end doubles
/// until `F` changes sign; an Illinois false-position iteration with
/// bisection fallback then refines it.
pub fn solve_threshold(
    res: &Resolvent,
    k_eff: f64,
    opts: &ThresholdOptions,
) -> Result<ThresholdSolution> {
    if !(k_eff > 0.0) || !k_eff.is_finite() {
        return Err(invalid(format!(
            "effective cost must be positive, got {k_eff}"
        )));
    }
    if !res.cost().is_symmetric_about_origin() {
        return Err(invalid(
            "closed-form thresholds need a running cost symmetric about 0; use the finite-difference solver",
        ));
    }
    let f = |x: f64| smoothing_residual(x, res, k_eff);

    let mut lo = 0.0;
    let mut f_lo = f(lo)?;
    if !(f_lo < 0.0) {
        return Err(Error::Invariant(format!("F(0) = {f_lo} is not negative")));
    }
    let mut hi = k_eff.max(res.sigma() / (2.0 * res.rho()).sqrt());
    let mut f_hi = f(hi)?;
    let mut doublings = 0;
    while f_hi <= 0.0 {
        if doublings == opts.max_doublings {
            return Err(Error::NoRoot { reached: hi });
        }
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = f(hi)?;
        doublings += 1;
    }

    let mut iterations = 0;
    // Illinois: halve the retained endpoint's value after two same-side steps.
    let mut side = 0i8;
    let (mut g_lo, mut g_hi) = (f_lo, f_hi);
    let mut best = if f_lo.abs() < f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    while iterations < opts.max_iterations {
        let width = hi - lo;
        if (best.1.abs() < opts.tol && width <= opts.width_tol * hi.max(1.0))
            || width <= 4.0 * f64::EPSILON * hi
        {
            break;
        }
        iterations += 1;
        let mut x = hi - g_hi * (hi - lo) / (g_hi - g_lo);
        // Keep the secant step well inside the bracket.
        let margin = 0.01 * (hi - lo);
        if !(x > lo + margin && x < hi - margin) || iterations % 8 == 0 {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            lo = x;
            g_lo = fx;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            g_hi = fx;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    let (c, residual) = best;
    if !(residual.abs() < opts.tol) {
        return Err(Error::Accuracy {
            achieved: residual.abs(),
            tolerance: opts.tol,
        });
    }
    Ok(ThresholdSolution {
        c,
        k_eff,
        residual,
        bracket: (lo, hi),
        iterations,
    })
}

/// Rejects `K⁺ ≠ K⁻`, which has no closed-form band.
pub fn require_symmetric_cost(k_plus: f64, k_minus: f64) -> Result<f64> {
    if k_plus != k_minus {
        return Err(Error::AsymmetricCost { k_plus, k_minus });
    }
    Ok(k_plus)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NashParetoComparison {
    /// Regulator's threshold, `K_eff = K/2`.
    pub pareto: ThresholdSolution,
    /// Equilibrium threshold, `K_eff = K`.
    pub nash: ThresholdSolution,
    pub gap: f64,
}

impl NashParetoComparison {
    pub fn c1(&self) -> f64 {
        self.pareto.c
    }

    pub fn c2(&self) -> f64 {
        self.nash.c
    }
}

/// Solves the Pareto (`K/2`) and Nash (`K`) thresholds and checks `c₂ > c₁`.
pub fn compare_nash_pareto(
    res: &Resolvent,
    k: f64,
    opts: &ThresholdOptions,
) -> Result<NashParetoComparison> {
    let pareto = solve_threshold(res, 0.5 * k, opts)?;
    let nash = solve_threshold(res, k, opts)?;
    let gap = nash.c - pareto.c;
    if !(gap > 0.0) {
        return Err(Error::Invariant(format!(
            "Nash threshold {} does not exceed Pareto threshold {}",
            nash.c, pareto.c
        )));
    }
    Ok(NashParetoComparison { pareto, nash, gap })
}

#[derive(Debug, Clone)]
pub struct ProductThreshold {
    pub product: usize,
    /// Investor-averaged running cost `(1/M) Σᵢ hᵢⱼ`.
    pub cost: RunningCost,
    pub sigma_tilde: f64,
    /// `k*ⱼ`, the cheapest unit adjustment cost.
    pub k_star: f64,
    pub solution: ThresholdSolution,
}

impl ProductThreshold {
    pub fn b(&self) -> f64 {
        self.solution.c
    }
}

/// Volatility of product `j`'s aggregate state under a convention.
///
/// `SumOfSquares` sums the squared capacity rows; `DriverNorm` is the norm of
/// the full driver `(Σᵢ σ̂ᵢⱼ, −γⱼ eⱼ)`.
pub fn product_volatility(
    inv: &InvestmentSpec,
    j: usize,
    convention: SigmaConvention,
) -> Result<f64> {
    let rows: Vec<Vec<f64>> = inv.volatility.iter().map(|r| r[j].clone()).collect();
    match convention {
        SigmaConvention::SumOfSquares => effective_volatility(&rows, convention),
        SigmaConvention::DriverNorm => {
            let d = inv.brownian_dim();
            let summed: f64 = (0..d)
                .map(|k| rows.iter().map(|r| r[k]).sum::<f64>().powi(2))
                .sum();
            let s = (summed + inv.demand_vol[j].powi(2)).sqrt();
            if s == 0.0 {
                return Err(Error::DegenerateDiffusion);
            }
            Ok(s)
        }
    }
}

/// Per-product thresholds `b_j` of the separable investment problem with
/// `K_eff = k*ⱼ/M`.
pub fn product_thresholds(
    inv: &InvestmentSpec,
    convention: SigmaConvention,
    opts: &ThresholdOptions,
) -> Result<Vec<ProductThreshold>> {
    inv.validate()?;
    let m = inv.investors();
    (0..inv.products())
        .map(|j| {
            product_threshold(inv, j, m, convention, opts).map_err(|e| Error::Product {
                index: j,
                source: Box::new(e),
            })
        })
        .collect()
}

fn product_threshold(
    inv: &InvestmentSpec,
    j: usize,
    m: usize,
    convention: SigmaConvention,
    opts: &ThresholdOptions,
) -> Result<ProductThreshold> {
    let drift: f64 = inv.drift.iter().map(|r| r[j]).sum::<f64>() - inv.demand_drift[j];
    if drift != 0.0 {
        return Err(invalid(format!(
            "aggregate drift {drift} is nonzero; no closed-form threshold, use the finite-difference solver"
        )));
    }
    let p_star = inv
        .expand_cost
        .iter()
        .map(|r| r[j])
        .fold(f64::INFINITY, f64::min);
    let q_star = inv
        .contract_cost
        .iter()
        .map(|r| r[j])
        .fold(f64::INFINITY, f64::min);
    let k_star = require_symmetric_cost(p_star, q_star)?;
    let cost = RunningCost::average(&inv.costs.iter().map(|r| r[j].clone()).collect::<Vec<_>>())?;
    let sigma_tilde = product_volatility(inv, j, convention)?;
    let res = Resolvent::new(cost.clone(), sigma_tilde, inv.discount)?;
    let solution = solve_threshold(&res, k_star / m as f64, opts)?;
    Ok(ProductThreshold {
        product: j,
        cost,
        sigma_tilde,
        k_star,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard() -> Resolvent {
        Resolvent::new(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap(), 1.0, 1.0).unwrap()
    }

    #[test]
    fn residual_at_zero() {
        let r = standard();
        assert_eq!(smoothing_residual(0.0, &r, 0.5).unwrap(), -0.25);
        assert_eq!(smoothing_residual(0.0, &r, 0.0).unwrap(), 0.0);
        assert!(smoothing_residual(-1.0, &r, 0.5).is_err());
        assert!(smoothing_residual(50.0, &r, 0.5).unwrap() > 40.0);
    }

    #[test]
    fn standard_thresholds() {
        let r = standard();
        let opts = ThresholdOptions::default();
        let s = solve_threshold(&r, 0.5, &opts).unwrap();
        assert!((s.c - 0.835_423_348_595_224).abs() < 1e-11, "{}", s.c);
        assert!(s.residual.abs() < 1e-12);
        let (lo, hi) = s.bracket;
        assert!(smoothing_residual(lo, &r, 0.5).unwrap() < 0.0 || lo == s.c);
        assert!(smoothing_residual(hi, &r, 0.5).unwrap() > 0.0 || hi == s.c);
        let cmp = compare_nash_pareto(&r, 1.0, &opts).unwrap();
        assert!((cmp.c2() - 1.155_194_976_722_150_5).abs() < 1e-11);
        assert!((cmp.gap - 0.319_771_628_126_926_5).abs() < 1e-11);
    }

    #[test]
    fn asymmetric_costs_are_refused() {
        assert!(matches!(
            require_symmetric_cost(1.0, 2.0),
            Err(Error::AsymmetricCost { .. })
        ));
    }

    #[test]
    fn off_center_cost_is_refused() {
        let r = Resolvent::new(RunningCost::quadratic(1.0, 0.3, 0.0).unwrap(), 1.0, 1.0).unwrap();
        assert!(solve_threshold(&r, 0.5, &ThresholdOptions::default()).is_err());
    }
}
