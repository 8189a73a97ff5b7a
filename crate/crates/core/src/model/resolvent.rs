//! Brownian resolvent of a running cost.
//!
//! For `h` and a driftless diffusion with volatility `σ̃` discounted at rate `ρ`,
//!
//! ```text
//! p(x) = E ∫₀^∞ e^{−ρt} h(x + σ̃ B_t) dt
//!      = 1/(σ̃√(2ρ)) ∫ h(z) exp(−√(2ρ)|x − z|/σ̃) dz,
//! ```
//!
//! which solves `ρp − (σ̃²/2)p″ = h`. Quadratic costs use the closed form;
//! anything else goes through the Green kernel with adaptive quadrature, and
//! `p′`, `p″` are the same kernel applied to `h′`, `h″`.

use crate::error::{invalid, Error, Result};
use crate::model::cost::RunningCost;
use crate::quadrature;

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;
const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventPoint {
    pub p: f64,
    pub dp: f64,
    pub d2p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    ClosedForm,
    Kernel,
}

#[derive(Debug, Clone)]
pub struct Resolvent {
    cost: RunningCost,
    sigma: f64,
    rho: f64,
    tol: f64,
    method: Method,
}

impl Resolvent {
    /// Closed form for quadratic costs, kernel quadrature otherwise.
    pub fn new(cost: RunningCost, sigma: f64, rho: f64) -> Result<Self> {
        Self::with_tolerance(cost, sigma, rho, DEFAULT_QUADRATURE_TOL)
    }

    pub fn with_tolerance(cost: RunningCost, sigma: f64, rho: f64, tol: f64) -> Result<Self> {
        let method = match cost {
            RunningCost::Quadratic(_) => Method::ClosedForm,
            RunningCost::Custom(_) => Method::Kernel,
        };
        Self::build(cost, sigma, rho, tol, method)
    }

    /// Forces the quadrature path, even for quadratic costs.
    pub fn by_quadrature(cost: RunningCost, sigma: f64, rho: f64, tol: f64) -> Result<Self> {
        Self::build(cost, sigma, rho, tol, Method::Kernel)
    }

    fn build(cost: RunningCost, sigma: f64, rho: f64, tol: f64, method: Method) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!(
                "effective volatility must be positive, got {sigma}"
            )));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(invalid(format!(
                "discount rate must be positive, got {rho}"
            )));
        }
        if !(tol > 0.0) {
            return Err(invalid(format!(
                "quadrature tolerance must be positive, got {tol}"
            )));
        }
        Ok(Self {
            cost,
            sigma,
            rho,
            tol,
            method,
        })
    }

    pub fn cost(&self) -> &RunningCost {
        &self.cost
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn uses_closed_form(&self) -> bool {
        self.method == Method::ClosedForm
    }

    /// Decay rate `√(2ρ)/σ̃` of the Green kernel.
    pub fn kernel_rate(&self) -> f64 {
        (2.0 * self.rho).sqrt() / self.sigma
    }

    /// `(p, p′, p″)` at `x`; fails when the quadrature misses its tolerance.
    pub fn eval(&self, x: f64) -> Result<ResolventPoint> {
        let (point, err) = self.eval_with_error(x);
        if err > self.tol {
            return Err(Error::Accuracy {
                achieved: err,
                tolerance: self.tol,
            });
        }
        Ok(point)
    }

    /// Best available estimate of `(p, p′, p″)`, ignoring the accuracy check.
    pub fn point(&self, x: f64) -> ResolventPoint {
        self.eval_with_error(x).0
    }

    pub fn p(&self, x: f64) -> f64 {
        self.point(x).p
    }

    pub fn dp(&self, x: f64) -> f64 {
        self.point(x).dp
    }

    pub fn d2p(&self, x: f64) -> f64 {
        self.point(x).d2p
    }

    /// `ρp(x) − (σ̃²/2)p″(x) − h(x)`, zero up to quadrature error.
    pub fn pde_residual(&self, x: f64) -> f64 {
        let pt = self.point(x);
        self.rho * pt.p - 0.5 * self.sigma * self.sigma * pt.d2p - self.cost.value(x)
    }

    fn eval_with_error(&self, x: f64) -> (ResolventPoint, f64) {
        match (self.method, &self.cost) {
            (Method::ClosedForm, RunningCost::Quadratic(q)) => {
                let d = x - q.center;
                let rho = self.rho;
                let point = ResolventPoint {
                    p: q.curvature * d * d / rho
                        + q.curvature * self.sigma * self.sigma / (rho * rho)
                        + q.offset / rho,
                    dp: 2.0 * q.curvature * d / rho,
                    d2p: 2.0 * q.curvature / rho,
                };
                (point, 0.0)
            }
            _ => self.kernel(x),
        }
    }

    fn kernel(&self, x: f64) -> (ResolventPoint, f64) {
        let (_, c_hi) = self.cost.curvature_bounds();
        let cost = &self.cost;
        let (p, e0) = self.convolve(
            |z| cost.value(z),
            x,
            [cost.value(x).abs(), cost.derivative(x).abs(), 0.5 * c_hi],
        );
        let (dp, e1) = self.convolve(
            |z| cost.derivative(z),
            x,
            [cost.derivative(x).abs(), c_hi, 0.0],
        );
        let (d2p, e2) = self.convolve(|z| cost.second_derivative(z), x, [c_hi, 0.0, 0.0]);
        (ResolventPoint { p, dp, d2p }, e0.max(e1).max(e2))
    }

    /// `1/(σ̃√(2ρ)) ∫ f(z) e^{−k|x−z|} dz`, split at the kink `z = x`.
    /// `growth = [a0, a1, a2]` bounds `|f(x ± u)| ≤ a0 + a1 u + a2 u²` and sizes the
    /// truncation so the discarded tails stay below a quarter of the tolerance.
    fn convolve<F: Fn(f64) -> f64>(&self, f: F, x: f64, growth: [f64; 3]) -> (f64, f64) {
        let k = self.kernel_rate();
        let pref = 1.0 / (self.sigma * (2.0 * self.rho).sqrt());
        let [a0, a1, a2] = growth;
        let tail = |l: f64| {
            pref * (-k * l).exp()
                * (a0 / k
                    + a1 * (l / k + 1.0 / (k * k))
                    + a2 * (l * l / k + 2.0 * l / (k * k) + 2.0 / (k * k * k)))
        };
        let budget = 0.25 * self.tol;
        let mut l = 1.0 / k;
        while tail(l) > 0.5 * budget && l < 1e6 / k {
            l *= 1.5;
        }
        let tail_err = 2.0 * tail(l);
        let side_tol = 0.5 * (self.tol - tail_err).max(0.25 * self.tol) / pref;
        let right = quadrature::integrate(
            |u| f(x + u) * (-k * u).exp(),
            0.0,
            l,
            side_tol,
            MAX_INTERVALS,
        );
        let left = quadrature::integrate(
            |u| f(x - u) * (-k * u).exp(),
            0.0,
            l,
            side_tol,
            MAX_INTERVALS,
        );
        (
            pref * (right.value + left.value),
            pref * (right.error + left.error) + tail_err,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_quadratic() -> RunningCost {
        RunningCost::quadratic(1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn closed_form_gaussian_moments() {
        let r = Resolvent::new(unit_quadratic(), 1.0, 1.0).unwrap();
        let at0 = r.eval(0.0).unwrap();
        assert_eq!((at0.p, at0.dp, at0.d2p), (1.0, 0.0, 2.0));
        assert_eq!(r.p(2.0), 5.0);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let closed = Resolvent::new(unit_quadratic(), 0.8, 1.7).unwrap();
        let quad = Resolvent::by_quadrature(unit_quadratic(), 0.8, 1.7, 1e-10).unwrap();
        for &x in &[-2.0, -0.3, 0.0, 1.1, 3.0] {
            let a = closed.point(x);
            let b = quad.eval(x).unwrap();
            assert!((a.p - b.p).abs() < 1e-9, "p at {x}: {} vs {}", a.p, b.p);
            assert!((a.dp - b.dp).abs() < 1e-9);
            assert!((a.d2p - b.d2p).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Resolvent::new(unit_quadratic(), 0.0, 1.0).is_err());
        assert!(Resolvent::new(unit_quadratic(), 1.0, 0.0).is_err());
    }

    #[test]
    fn unreachable_tolerance_is_an_accuracy_error() {
        let h = RunningCost::softened_quadratic(0.5, 1.0).unwrap();
        let r = Resolvent::by_quadrature(h, 1.0, 1.0, 1e-300).unwrap();
        assert!(matches!(r.eval(0.3), Err(Error::Accuracy { .. })));
    }
}
