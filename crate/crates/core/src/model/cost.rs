//! One-dimensional convex running costs `h`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `h(y) = curvature · (y − center)² + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCost {
    pub curvature: f64,
    pub center: f64,
    pub offset: f64,
}

/// A user-supplied cost given by its value and first two derivatives, with
/// declared curvature bounds `curvature_lo ≤ h″ ≤ curvature_hi`.
#[derive(Clone)]
pub struct CustomCost {
    name: String,
    value: ScalarFn,
    first: ScalarFn,
    second: ScalarFn,
    center: f64,
    curvature_lo: f64,
    curvature_hi: f64,
}

impl fmt::Debug for CustomCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCost")
            .field("name", &self.name)
            .field("center", &self.center)
            .field("curvature_lo", &self.curvature_lo)
            .field("curvature_hi", &self.curvature_hi)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum RunningCost {
    Quadratic(QuadraticCost),
    Custom(CustomCost),
}

/// Half-width of the window over which custom curvature bounds are sampled.
const SAMPLE_HALF_WIDTH: f64 = 50.0;
const SAMPLE_COUNT: usize = 2001;

impl RunningCost {
    pub fn quadratic(curvature: f64, center: f64, offset: f64) -> Result<Self> {
        if !(curvature > 0.0) || !curvature.is_finite() {
            return Err(invalid(format!(
                "quadratic curvature must be positive, got {curvature}"
            )));
        }
        if !center.is_finite() || !offset.is_finite() {
            return Err(invalid("quadratic center and offset must be finite"));
        }
        if offset < 0.0 {
            return Err(invalid(format!("h(center) = {offset} must be nonnegative")));
        }
        Ok(RunningCost::Quadratic(QuadraticCost {
            curvature,
            center,
            offset,
        }))
    }

    /// Builds a custom cost and checks the declared curvature bounds by sampling
    /// `h″` on `center ± 50`.
    pub fn custom(
        name: impl Into<String>,
        value: ScalarFn,
        first: ScalarFn,
        second: ScalarFn,
        center: f64,
        curvature_lo: f64,
        curvature_hi: f64,
    ) -> Result<Self> {
        if !(curvature_lo > 0.0) || !(curvature_hi >= curvature_lo) || !curvature_hi.is_finite() {
            return Err(invalid(format!(
                "curvature bounds must satisfy 0 < lo <= hi < inf, got [{curvature_lo}, {curvature_hi}]"
            )));
        }
        let cost = CustomCost {
            name: name.into(),
            value,
            first,
            second,
            center,
            curvature_lo,
            curvature_hi,
        };
        let h0 = (cost.value)(center);
        if !(h0 >= 0.0) {
            return Err(invalid(format!("h(center) = {h0} must be nonnegative")));
        }
        let slack = 1e-12 * curvature_hi.max(1.0);
        for k in 0..SAMPLE_COUNT {
            let x = center - SAMPLE_HALF_WIDTH
                + 2.0 * SAMPLE_HALF_WIDTH * k as f64 / (SAMPLE_COUNT - 1) as f64;
            let c = (cost.second)(x);
            if !(c >= curvature_lo - slack && c <= curvature_hi + slack) {
                return Err(invalid(format!(
                    "h''({x}) = {c} outside declared bounds [{curvature_lo}, {curvature_hi}]"
                )));
            }
        }
        Ok(RunningCost::Custom(cost))
    }

    /// `h(y) = a·y² + b·(√(1+y²) − 1)`: convex, symmetric, with curvature
    /// `2a + b(1+y²)^{-3/2}` decreasing on `y > 0` and bounded in `[2a, 2a+b]`.
    pub fn softened_quadratic(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !(b >= 0.0) {
            return Err(invalid(format!(
                "softened quadratic needs a > 0, b >= 0 (got a={a}, b={b})"
            )));
        }
        Self::custom(
            format!("softened_quadratic(a={a}, b={b})"),
            Arc::new(move |y: f64| a * y * y + b * ((1.0 + y * y).sqrt() - 1.0)),
            Arc::new(move |y: f64| 2.0 * a * y + b * y / (1.0 + y * y).sqrt()),
            Arc::new(move |y: f64| 2.0 * a + b * (1.0 + y * y).powf(-1.5)),
            0.0,
            2.0 * a,
            2.0 * a + b,
        )
    }

    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        match self {
            RunningCost::Quadratic(q) => {
                let d = y - q.center;
                q.curvature * d * d + q.offset
            }
            RunningCost::Custom(c) => (c.value)(y),
        }
    }

    #[inline]
    pub fn derivative(&self, y: f64) -> f64 {
        match self {
            RunningCost::Quadratic(q) => 2.0 * q.curvature * (y - q.center),
            RunningCost::Custom(c) => (c.first)(y),
        }
    }

    #[inline]
    pub fn second_derivative(&self, y: f64) -> f64 {
        match self {
            RunningCost::Quadratic(q) => 2.0 * q.curvature,
            RunningCost::Custom(c) => (c.second)(y),
        }
    }

    /// `(c_lo, c_hi)` with `c_lo ≤ h″ ≤ c_hi`.
    pub fn curvature_bounds(&self) -> (f64, f64) {
        match self {
            RunningCost::Quadratic(q) => (2.0 * q.curvature, 2.0 * q.curvature),
            RunningCost::Custom(c) => (c.curvature_lo, c.curvature_hi),
        }
    }

    pub fn center(&self) -> f64 {
        match self {
            RunningCost::Quadratic(q) => q.center,
            RunningCost::Custom(c) => c.center,
        }
    }

    pub fn name(&self) -> String {
        match self {
            RunningCost::Quadratic(q) => {
                format!(
                    "quadratic(a={}, s0={}, offset={})",
                    q.curvature, q.center, q.offset
                )
            }
            RunningCost::Custom(c) => c.name.clone(),
        }
    }

    /// Sampled check that `h(center + d) = h(center − d)` and that the center is 0,
    /// as required by the closed-form band solvers.
    pub fn is_symmetric_about_origin(&self) -> bool {
        if self.center() != 0.0 {
            return false;
        }
        (1..=200).all(|k| {
            let d = 0.05 * k as f64;
            let (a, b) = (self.value(d), self.value(-d));
            (a - b).abs() <= 1e-12 * (1.0 + a.abs())
        })
    }

    /// Pointwise sum `h₁ + h₂`.
    pub fn sum(&self, other: &RunningCost) -> RunningCost {
        Self::weighted_sum(&[(1.0, self.clone()), (1.0, other.clone())])
    }

    /// Arithmetic mean `(1/n) Σ hᵢ`.
    pub fn average(costs: &[RunningCost]) -> Result<RunningCost> {
        if costs.is_empty() {
            return Err(invalid("cannot average an empty list of costs"));
        }
        let w = 1.0 / costs.len() as f64;
        Ok(Self::weighted_sum(
            &costs.iter().map(|c| (w, c.clone())).collect::<Vec<_>>(),
        ))
    }

    /// `Σ wᵢ hᵢ` for positive weights; stays quadratic when every term is.
    pub fn weighted_sum(terms: &[(f64, RunningCost)]) -> RunningCost {
        let all_quadratic: Option<Vec<(f64, QuadraticCost)>> = terms
            .iter()
            .map(|(w, c)| match c {
                RunningCost::Quadratic(q) => Some((*w, *q)),
                RunningCost::Custom(_) => None,
            })
            .collect();
        if let Some(qs) = all_quadratic {
            let a: f64 = qs.iter().map(|(w, q)| w * q.curvature).sum();
            let center = qs
                .iter()
                .map(|(w, q)| w * q.curvature * q.center)
                .sum::<f64>()
                / a;
            let raw: f64 = qs
                .iter()
                .map(|(w, q)| w * (q.curvature * q.center * q.center + q.offset))
                .sum();
            return RunningCost::Quadratic(QuadraticCost {
                curvature: a,
                center,
                offset: raw - a * center * center,
            });
        }
        let parts: Vec<(f64, RunningCost)> = terms.to_vec();
        let (p0, p1, p2) = (parts.clone(), parts.clone(), parts.clone());
        let lo = parts.iter().map(|(w, c)| w * c.curvature_bounds().0).sum();
        let hi = parts.iter().map(|(w, c)| w * c.curvature_bounds().1).sum();
        let names: Vec<String> = parts
            .iter()
            .map(|(w, c)| format!("{w}*{}", c.name()))
            .collect();
        let center = parts[0].1.center();
        RunningCost::Custom(CustomCost {
            name: names.join(" + "),
            value: Arc::new(move |y| p0.iter().map(|(w, c)| w * c.value(y)).sum()),
            first: Arc::new(move |y| p1.iter().map(|(w, c)| w * c.derivative(y)).sum()),
            second: Arc::new(move |y| p2.iter().map(|(w, c)| w * c.second_derivative(y)).sum()),
            center,
            curvature_lo: lo,
            curvature_hi: hi,
        })
    }

    /// Central finite-difference check of the supplied derivatives at `y`;
    /// returns the larger of the two absolute discrepancies.
    pub fn derivative_mismatch(&self, y: f64, step: f64) -> f64 {
        let fd1 = (self.value(y + step) - self.value(y - step)) / (2.0 * step);
        let fd2 = (self.derivative(y + step) - self.derivative(y - step)) / (2.0 * step);
        (fd1 - self.derivative(y))
            .abs()
            .max((fd2 - self.second_derivative(y)).abs())
    }
}
