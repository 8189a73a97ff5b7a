//! Joint running costs `H : ℝᴺ → ℝ` with gradient and Hessian access.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::model::cost::RunningCost;

pub trait JointCost: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// `H(x) = Σ Lᵢ [κᵢ (xⁱ − Σ_{j≠i} a_j xʲ)² + νᵢ (xⁱ)²]`, the interbank
/// benchmark-deviation payoff.
#[derive(Debug, Clone, PartialEq)]
pub struct InterbankCost {
    kappa: Vec<f64>,
    nu: Vec<f64>,
    benchmark: Vec<f64>,
    weights: Vec<f64>,
}

impl InterbankCost {
    pub fn new(
        kappa: Vec<f64>,
        nu: Vec<f64>,
        benchmark: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = kappa.len();
        if n == 0 || nu.len() != n || benchmark.len() != n || weights.len() != n {
            return Err(invalid(
                "interbank cost: kappa, nu, a and L must have the same nonzero length",
            ));
        }
        if kappa.iter().any(|&k| !(k > 0.0)) || nu.iter().any(|&v| !(v >= 0.0)) {
            return Err(invalid(
                "interbank cost: kappa must be positive and nu nonnegative",
            ));
        }
        if weights.iter().any(|&l| !(l > 0.0)) {
            return Err(invalid("interbank cost: welfare weights must be positive"));
        }
        if benchmark.iter().any(|&a| !(a >= 0.0)) {
            return Err(invalid(
                "interbank cost: benchmark weights must be nonnegative",
            ));
        }
        Ok(Self {
            kappa,
            nu,
            benchmark,
            weights,
        })
    }

    /// Interbank payoff requiring
    /// both `κᵢ > 0` and `νᵢ > 0`.
    pub fn strict(
        kappa: Vec<f64>,
        nu: Vec<f64>,
        benchmark: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if nu.iter().any(|&v| !(v > 0.0)) {
            return Err(invalid("interbank cost: nu must be positive"));
        }
        Self::new(kappa, nu, benchmark, weights)
    }

    fn deviation(&self, i: usize, x: &[f64]) -> f64 {
        let others: f64 = (0..x.len())
            .filter(|&j| j != i)
            .map(|j| self.benchmark[j] * x[j])
            .sum();
        x[i] - others
    }

    /// `∂ rᵢ / ∂ x_k` for the deviation `rᵢ = xⁱ − Σ_{j≠i} a_j xʲ`.
    fn deviation_direction(&self, i: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|k| if k == i { 1.0 } else { -self.benchmark[k] })
            .collect()
    }
}

impl JointCost for InterbankCost {
    fn dim(&self) -> usize {
        self.kappa.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| {
                let r = self.deviation(i, x);
                self.weights[i] * (self.kappa[i] * r * r + self.nu[i] * x[i] * x[i])
            })
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut g = vec![0.0; n];
        for i in 0..n {
            let r = self.deviation(i, x);
            let dir = self.deviation_direction(i);
            for k in 0..n {
                g[k] += 2.0 * self.weights[i] * self.kappa[i] * r * dir[k];
            }
            g[i] += 2.0 * self.weights[i] * self.nu[i] * x[i];
        }
        g
    }

    fn hessian(&self, _x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            let dir = self.deviation_direction(i);
            let scale = 2.0 * self.weights[i] * self.kappa[i];
            for a in 0..n {
                for b in 0..n {
                    h[(a, b)] += scale * dir[a] * dir[b];
                }
            }
            h[(i, i)] += 2.0 * self.weights[i] * self.nu[i];
        }
        h
    }
}

/// `H(x¹, x²) = h(x¹ − x²)`.
#[derive(Debug, Clone)]
pub struct DifferenceCost(pub RunningCost);

impl JointCost for DifferenceCost {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(x[0] - x[1])
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.0.derivative(x[0] - x[1]);
        vec![d, -d]
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let c = self.0.second_derivative(x[0] - x[1]);
        DMatrix::from_row_slice(2, 2, &[c, -c, -c, c])
    }
}

/// `H(x) = Σ hⱼ(xʲ)`.
#[derive(Debug, Clone)]
pub struct SeparableCost(pub Vec<RunningCost>);

impl JointCost for SeparableCost {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(h, &xi)| h.value(xi)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.0
            .iter()
            .zip(x)
            .map(|(h, &xi)| h.derivative(xi))
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let diag: Vec<f64> = self
            .0
            .iter()
            .zip(x)
            .map(|(h, &xi)| h.second_derivative(xi))
            .collect();
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
    }
}

pub type JointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A joint cost given only by its values; derivatives by central differences.
#[derive(Clone)]
pub struct FnJointCost {
    dim: usize,
    f: JointFn,
    step: f64,
}

impl FnJointCost {
    pub fn new(dim: usize, f: JointFn) -> Self {
        Self { dim, f, step: 1e-4 }
    }
}

impl JointCost for FnJointCost {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let h = self.step;
        let mut y = x.to_vec();
        (0..self.dim)
            .map(|k| {
                y[k] = x[k] + h;
                let fp = (self.f)(&y);
                y[k] = x[k] - h;
                let fm = (self.f)(&y);
                y[k] = x[k];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let h = self.step;
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        let mut y = x.to_vec();
        let f0 = (self.f)(x);
        for a in 0..n {
            for b in a..n {
                let v = if a == b {
                    y[a] = x[a] + h;
                    let fp = (self.f)(&y);
                    y[a] = x[a] - h;
                    let fm = (self.f)(&y);
                    y[a] = x[a];
                    (fp - 2.0 * f0 + fm) / (h * h)
                } else {
                    let mut corner = |sa: f64, sb: f64| {
                        y[a] = x[a] + sa * h;
                        y[b] = x[b] + sb * h;
                        let v = (self.f)(&y);
                        y[a] = x[a];
                        y[b] = x[b];
                        v
                    };
                    (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                        / (4.0 * h * h)
                };
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    }
}

/// Builds the interbank payoff as a joint evaluator (`interbank_running_cost`).
pub fn interbank_running_cost(
    kappa: &[f64],
    nu: &[f64],
    benchmark: &[f64],
    weights: &[f64],
) -> Result<InterbankCost> {
    InterbankCost::strict(
        kappa.to_vec(),
        nu.to_vec(),
        benchmark.to_vec(),
        weights.to_vec(),
    )
}
