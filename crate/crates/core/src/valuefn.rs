//! Closed-form value functions of the band problems.

use std::fmt;
use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::model::game::{InvestmentSpec, SigmaConvention};
use crate::model::resolvent::Resolvent;
use crate::thresholds::{product_thresholds, solve_threshold, ThresholdOptions, ThresholdSolution};

/// Which branch of the value function a point falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `|x| ≤ c`: no action.
    Interior,
    /// `x > c`: push down, slope `+K`.
    Upper,
    /// `x < −c`: push up, slope `−K`.
    Lower,
}

impl Branch {
    pub fn id(self) -> &'static str {
        match self {
            Branch::Interior => "interior",
            Branch::Upper => "upper_gradient",
            Branch::Lower => "lower_gradient",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuePoint {
    pub v: f64,
    pub dv: f64,
    pub d2v: f64,
    pub branch: Branch,
}

/// Signed residuals of `max{ρv − h − (σ̃²/2)v″, |v′| − K_eff} = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjbResidual {
    pub interior: f64,
    pub gradient: f64,
    pub branch: Branch,
}

impl HjbResidual {
    pub fn max(&self) -> f64 {
        self.interior.max(self.gradient)
    }
}

/// `v(x) = A cosh(kx) + p(x)` on `|x| ≤ c`, continued linearly with slope
/// `±K_eff` outside, `k = √(2ρ)/σ̃`.
#[derive(Debug, Clone)]
pub struct PiecewiseValue {
    res: Resolvent,
    c: f64,
    a: f64,
    k_eff: f64,
    /// `v(c)`, cached for the linear branches.
    v_c: f64,
}

impl PiecewiseValue {
    /// Solves the threshold for `K_eff` and builds the value function.
    pub fn solve(res: Resolvent, k_eff: f64, opts: &ThresholdOptions) -> Result<Self> {
        let sol = solve_threshold(&res, k_eff, opts)?;
        Self::from_threshold(res, &sol)
    }

    pub fn from_threshold(res: Resolvent, sol: &ThresholdSolution) -> Result<Self> {
        Self::with_band(res, sol.c, sol.k_eff)
    }

    /// Builds the cosh-plus-resolvent profile for an arbitrary band `c`.
    /// Smooth pasting only holds when `c` solves the threshold equation.
    pub fn with_band(res: Resolvent, c: f64, k_eff: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidBand(c));
        }
        if !(k_eff > 0.0) {
            return Err(invalid("effective cost must be positive"));
        }
        let a = cosh_coefficient(&res, c);
        let k = res.kernel_rate();
        let v_c = a * (k * c).cosh() + res.p(c);
        Ok(Self {
            res,
            c,
            a,
            k_eff,
            v_c,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.c
    }

    /// The cosh coefficient `A`.
    pub fn coefficient(&self) -> f64 {
        self.a
    }

    pub fn k_eff(&self) -> f64 {
        self.k_eff
    }

    pub fn resolvent(&self) -> &Resolvent {
        &self.res
    }

    pub fn eval(&self, x: f64) -> ValuePoint {
        let ax = x.abs();
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        if ax > self.c {
            return ValuePoint {
                v: self.v_c + self.k_eff * (ax - self.c),
                dv: sign * self.k_eff,
                d2v: 0.0,
                branch: if x > 0.0 {
                    Branch::Upper
                } else {
                    Branch::Lower
                },
            };
        }
        let k = self.res.kernel_rate();
        let pt = self.res.point(ax);
        ValuePoint {
            v: self.a * (k * ax).cosh() + pt.p,
            dv: sign * (self.a * k * (k * ax).sinh() + pt.dp),
            d2v: self.a * k * k * (k * ax).cosh() + pt.d2p,
            branch: Branch::Interior,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).v
    }

    pub fn hjb_residual(&self, x: f64) -> HjbResidual {
        let pt = self.eval(x);
        let s = self.res.sigma();
        HjbResidual {
            interior: self.res.rho() * pt.v - self.res.cost().value(x) - 0.5 * s * s * pt.d2v,
            gradient: pt.dv.abs() - self.k_eff,
            branch: pt.branch,
        }
    }

    /// Writes `x,v,dv,d2v,branch` rows for every grid point.
    pub fn write_csv<W: Write>(&self, xs: &[f64], out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["x", "v", "dv", "d2v", "branch"])?;
        for &x in xs {
            let pt = self.eval(x);
            w.write_record([
                x.to_string(),
                pt.v.to_string(),
                pt.dv.to_string(),
                pt.d2v.to_string(),
                pt.branch.id().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `A = −σ̃² p″(c) / (2ρ cosh(√(2ρ)c/σ̃))`.
pub fn cosh_coefficient(res: &Resolvent, c: f64) -> f64 {
    let s = res.sigma();
    -s * s * res.d2p(c) / (2.0 * res.rho() * (res.kernel_rate() * c).cosh())
}

/// Regulator's value of the two-player difference game.
#[derive(Debug, Clone)]
pub struct ParetoValue2P {
    pub profile: PiecewiseValue,
    /// True when the inputs were relabelled so that `K₁ ≥ K₂`.
    pub swapped: bool,
}

impl ParetoValue2P {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.profile.value(x1 - x2)
    }
}

/// `v(x¹, x²) = u(x¹ − x²)` with `K_eff = min(K₁, K₂)/2`.
pub fn pareto_value_2p(
    res: Resolvent,
    k1: f64,
    k2: f64,
    opts: &ThresholdOptions,
) -> Result<ParetoValue2P> {
    if !(k1 > 0.0) || !(k2 > 0.0) {
        return Err(invalid("intervention costs must be positive"));
    }
    let swapped = k1 < k2;
    let profile = PiecewiseValue::solve(res, 0.5 * k1.min(k2), opts)?;
    Ok(ParetoValue2P { profile, swapped })
}

/// Equilibrium values `(v¹, v²)` of the symmetric two-player game with
/// threshold `c₂` at `K_eff = K`.
#[derive(Debug, Clone)]
pub struct NashValue {
    inner: PiecewiseValue,
}

impl NashValue {
    pub fn solve(res: Resolvent, k: f64, opts: &ThresholdOptions) -> Result<Self> {
        Ok(Self {
            inner: PiecewiseValue::solve(res, k, opts)?,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.inner.c
    }

    pub fn coefficient(&self) -> f64 {
        self.inner.a
    }

    /// Player 1's value as a function of `z = x¹ − x²`: frozen at `z = −c₂`
    /// below the band, slope `K` above it.
    pub fn profile(&self, z: f64) -> ValuePoint {
        let c = self.inner.c;
        if z < -c {
            let edge = self.inner.eval(-c);
            return ValuePoint {
                v: edge.v,
                dv: 0.0,
                d2v: 0.0,
                branch: Branch::Lower,
            };
        }
        self.inner.eval(z)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> (f64, f64) {
        (self.profile(x1 - x2).v, self.profile(x2 - x1).v)
    }
}

/// `v(x) = Σⱼ vʲ(xʲ)` for the separable investment problem.
#[derive(Debug, Clone)]
pub struct SeparableValue {
    pub products: Vec<PiecewiseValue>,
}

impl SeparableValue {
    pub fn solve(
        inv: &InvestmentSpec,
        convention: SigmaConvention,
        opts: &ThresholdOptions,
    ) -> Result<Self> {
        let products = product_thresholds(inv, convention, opts)?
            .into_iter()
            .map(|pt| {
                let res = Resolvent::new(pt.cost.clone(), pt.sigma_tilde, inv.discount)?;
                PiecewiseValue::from_threshold(res, &pt.solution)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { products })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.products.len() {
            return Err(invalid(format!(
                "expected {} coordinates, got {}",
                self.products.len(),
                x.len()
            )));
        }
        Ok(self
            .products
            .iter()
            .zip(x)
            .map(|(v, &xj)| v.value(xj))
            .sum())
    }
}

/// `l(y) = Σᵢ lᵢ(yᵢ)` with `lᵢ(y) = LᵢKᵢ⁻ y` for `y ≥ 0` and `−LᵢKᵢ⁺ y` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionalCost {
    pub weights: Vec<f64>,
    pub k_plus: Vec<f64>,
    pub k_minus: Vec<f64>,
}

impl ProportionalCost {
    pub fn new(weights: Vec<f64>, k_plus: Vec<f64>, k_minus: Vec<f64>) -> Result<Self> {
        if weights.len() != k_plus.len() || weights.len() != k_minus.len() {
            return Err(invalid("weights and costs must have the same length"));
        }
        Ok(Self {
            weights,
            k_plus,
            k_minus,
        })
    }

    /// Single coordinate with unit weight.
    pub fn scalar(k_plus: f64, k_minus: f64) -> Self {
        Self {
            weights: vec![1.0],
            k_plus: vec![k_plus],
            k_minus: vec![k_minus],
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        y.iter()
            .enumerate()
            .map(|(i, &yi)| {
                if yi >= 0.0 {
                    self.weights[i] * self.k_minus[i] * yi
                } else {
                    -self.weights[i] * self.k_plus[i] * yi
                }
            })
            .sum()
    }
}

/// Projection onto the band `[−c, c]`.
pub fn band_projection(y: f64, c: f64) -> f64 {
    y.clamp(-c, c)
}

/// `v(π(x)) + l(x − π(x))` for a projection `π` onto the continuation region.
pub fn outside_band_value<P, V>(x: &[f64], project: P, value: V, l: &ProportionalCost) -> f64
where
    P: Fn(&[f64]) -> Vec<f64>,
    V: Fn(&[f64]) -> f64,
{
    let px = project(x);
    let d: Vec<f64> = x.iter().zip(&px).map(|(a, b)| a - b).collect();
    value(&px) + l.eval(&d)
}

/// One-dimensional jump-to-band value with the band projection and symmetric cost `K_eff`.
pub fn outside_band_value_1d(pv: &PiecewiseValue, x: f64) -> f64 {
    let c = pv.threshold();
    let l = ProportionalCost::scalar(pv.k_eff, pv.k_eff);
    outside_band_value(
        &[x],
        |y| vec![band_projection(y[0], c)],
        |y| pv.value(y[0]),
        &l,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::cost::RunningCost;

    fn demo() -> PiecewiseValue {
        let res = Resolvent::new(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap(), 1.0, 1.0).unwrap();
        PiecewiseValue::solve(res, 0.5, &ThresholdOptions::default()).unwrap()
    }

    #[test]
    fn value_at_origin() {
        let v = demo();
        assert!((v.coefficient() - (-0.560_855_601_593_769_7)).abs() < 1e-11);
        assert!((v.value(0.0) - 0.439_144_398_406_230_3).abs() < 1e-11);
        assert!(v.coefficient() < 0.0);
    }

    #[test]
    fn evenness_and_linear_branch() {
        let v = demo();
        for &x in &[0.1, 0.5, 0.83, 1.2, 3.0] {
            assert_eq!(v.value(x), v.value(-x));
        }
        let c = v.threshold();
        assert!((outside_band_value_1d(&v, c + 1.0) - (v.value(c) + 0.5)).abs() < 1e-14);
        assert_eq!(outside_band_value_1d(&v, 0.3), v.value(0.3));
        assert_eq!(v.eval(2.0 * c).branch, Branch::Upper);
        assert_eq!(v.hjb_residual(2.0 * c).gradient, 0.0);
    }

    #[test]
    fn proportional_cost_legs() {
        let l = ProportionalCost::scalar(3.0, 2.0);
        assert_eq!(l.eval(&[-1.0]), 3.0);
        assert_eq!(l.eval(&[1.0]), 2.0);
    }

    #[test]
    fn nash_profile_branches() {
        let res = Resolvent::new(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap(), 1.0, 1.0).unwrap();
        let n = NashValue::solve(res, 1.0, &ThresholdOptions::default()).unwrap();
        let c2 = n.threshold();
        let (v1, v2) = n.eval(0.4, 0.4);
        assert_eq!(v1, v2);
        assert!((v1 - 0.623_916_119_786_926_7).abs() < 1e-11);
        let (a, _) = n.eval(-c2 - 2.0, 0.0);
        assert_eq!(a, n.profile(-c2).v);
        let (u1, _) = n.eval(0.3, -0.2);
        let (_, u2) = n.eval(-0.2, 0.3);
        assert_eq!(u1, u2);
    }

    #[test]
    fn csv_layout() {
        let v = demo();
        let mut buf = Vec::new();
        v.write_csv(&[0.0, 2.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,v,dv,d2v,branch");
        assert!(lines[2].ends_with(",upper_gradient"));
        assert!(!text.contains('\r'));
    }
}
