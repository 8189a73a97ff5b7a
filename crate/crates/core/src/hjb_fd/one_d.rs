//! One-dimensional variational inequality
//! `max{ρu − μu′ − (σ̃²/2)u″ − h, u′ − K⁻, −u′ − K⁺} = 0`.

use super::howard::{IterationRecord, Link, Node, System};
use super::{FdOptions, Grid1D};
use crate::error::{invalid, Result};
use crate::valuefn::Branch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem1D {
    pub sigma: f64,
    pub rho: f64,
    /// Cost per unit of upward push; lower edge slope is `−K⁺`.
    pub k_plus: f64,
    /// Cost per unit of downward push; upper edge slope is `K⁻`.
    pub k_minus: f64,
    pub mu: f64,
}

impl Problem1D {
    pub fn symmetric(sigma: f64, rho: f64, k: f64) -> Self {
        Self {
            sigma,
            rho,
            k_plus: k,
            k_minus: k,
            mu: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.sigma > 0.0) {
            return Err(invalid(
                "finite-difference solve needs rho > 0 and sigma > 0",
            ));
        }
        if !(self.k_plus > 0.0 && self.k_minus > 0.0) || !self.mu.is_finite() {
            return Err(invalid(
                "finite-difference solve needs positive K+ and K- and a finite drift",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VISolution1D {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub labels: Vec<Branch>,
    pub log: Vec<IterationRecord>,
    /// Final `max_i |max_b B_b(u)_i|`, with PDE rows scaled by `Δ²` and
    /// gradient rows by `Δ`.
    pub residual: f64,
    /// Branch values per node: PDE (when present), upper, lower.
    pub branch_values: Vec<Vec<f64>>,
}

impl VISolution1D {
    /// Labels sampled values by one-sided slopes: a node is on the upper
    /// branch when its backward slope reaches `K⁻ − tol`, on the lower branch
    /// when its forward slope reaches `−K⁺ + tol`.
    pub fn from_values(
        grid: Grid1D,
        values: Vec<f64>,
        k_plus: f64,
        k_minus: f64,
        tol: f64,
    ) -> Result<Self> {
        if values.len() != grid.n {
            return Err(invalid("values do not match the grid"));
        }
        let d = grid.spacing();
        let n = grid.n;
        let labels = (0..n)
            .map(|i| {
                let back = (i > 0).then(|| (values[i] - values[i - 1]) / d);
                let fwd = (i + 1 < n).then(|| (values[i + 1] - values[i]) / d);
                if back.is_some_and(|s| s >= k_minus - tol) {
                    Branch::Upper
                } else if fwd.is_some_and(|s| s <= -k_plus + tol) {
                    Branch::Lower
                } else {
                    Branch::Interior
                }
            })
            .collect();
        Ok(Self {
            grid,
            values,
            labels,
            log: Vec::new(),
            residual: 0.0,
            branch_values: Vec::new(),
        })
    }

    /// Node values interpolated linearly.
    pub fn interpolate(&self, x: f64) -> f64 {
        let d = self.grid.spacing();
        let s = ((x - self.grid.lo) / d).clamp(0.0, (self.grid.n - 1) as f64);
        let i = (s.floor() as usize).min(self.grid.n - 2);
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }
}

/// Samples `h` at the grid nodes.
pub fn sample(grid: &Grid1D, h: impl Fn(f64) -> f64) -> Vec<f64> {
    grid.points().map(h).collect()
}

/// Solves the 1-D variational inequality by policy iteration.
///
/// Interior rows use the central second difference and an upwinded first
/// difference; the upper gradient row is `(u_i − u_{i−1})/Δ = K⁻` and the
/// lower one `(u_i − u_{i+1})/Δ = K⁺`. The first and last nodes choose
/// between a zero-curvature row and the outward gradient row, so far from the
/// band the slope is `±K` while a solution with no action region is kept flat.
pub fn solve_vi_1d(
    grid: &Grid1D,
    h: &[f64],
    problem: &Problem1D,
    opts: &FdOptions,
) -> Result<VISolution1D> {
    grid.validate()?;
    problem.validate()?;
    opts.validate()?;
    if h.len() != grid.n {
        return Err(invalid(format!(
            "h has {} samples for {} grid nodes",
            h.len(),
            grid.n
        )));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(invalid("h must be finite on the grid"));
    }
    let n = grid.n;
    let d = grid.spacing();
    let a = 0.5 * problem.sigma * problem.sigma;
    let up = Link {
        target: 0,
        offset: problem.k_minus * d,
    };
    let lo = Link {
        target: 0,
        offset: problem.k_plus * d,
    };
    let drift = problem.mu * d;
    let nodes: Vec<Node> = (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                // Edge rows: zero curvature, drift kept only when it points inward.
                let (inner, inward) = if i == 0 {
                    (1, drift.max(0.0))
                } else {
                    (n - 2, (-drift).max(0.0))
                };
                let link = if i == 0 {
                    Link { target: 1, ..lo }
                } else {
                    Link {
                        target: n - 2,
                        ..up
                    }
                };
                let mut stencil = vec![(i, problem.rho * d * d + inward)];
                if inward > 0.0 {
                    stencil.push((inner, -inward));
                }
                return Node {
                    pde: Some((stencil, d * d * h[i])),
                    links: vec![link],
                };
            }
            // Row scaled by Δ².
            let mut diag = 2.0 * a + problem.rho * d * d;
            let mut left = -a;
            let mut right = -a;
            if drift > 0.0 {
                diag += drift;
                right -= drift;
            } else {
                diag -= drift;
                left += drift;
            }
            Node {
                pde: Some((vec![(i - 1, left), (i, diag), (i + 1, right)], d * d * h[i])),
                links: vec![
                    Link {
                        target: i - 1,
                        ..up
                    },
                    Link {
                        target: i + 1,
                        ..lo
                    },
                ],
            }
        })
        .collect();
    let system = System { nodes };
    let out = system.solve(vec![0; n], opts.tol, opts.max_iter)?;
    let labels = out
        .policy
        .iter()
        .enumerate()
        .map(|(i, &p)| match p {
            0 => Branch::Interior,
            _ if i == 0 => Branch::Lower,
            _ if i == n - 1 => Branch::Upper,
            1 => Branch::Upper,
            _ => Branch::Lower,
        })
        .collect();
    let branch_values = (0..n)
        .map(|i| system.branch_values(&out.values, i))
        .collect();
    Ok(VISolution1D {
        grid: *grid,
        values: out.values,
        labels,
        log: out.log,
        residual: out.residual,
        branch_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::cost::RunningCost;
    use crate::model::resolvent::Resolvent;
    use crate::thresholds::ThresholdOptions;
    use crate::valuefn::PiecewiseValue;

    #[test]
    fn constant_cost_has_flat_solution() {
        let grid = Grid1D::new(-2.0, 2.0, 81).unwrap();
        let h = vec![0.7; grid.n];
        let sol = solve_vi_1d(
            &grid,
            &h,
            &Problem1D::symmetric(1.0, 2.0, 0.3),
            &FdOptions::default(),
        )
        .unwrap();
        for (v, l) in sol.values.iter().zip(&sol.labels) {
            assert!((v - 0.35).abs() < 1e-10, "{v}");
            assert_eq!(*l, Branch::Interior);
        }
    }

    #[test]
    fn quadratic_matches_analytic() {
        let grid = Grid1D::new(-4.0, 4.0, 801).unwrap();
        let h = sample(&grid, |x| x * x);
        let sol = solve_vi_1d(
            &grid,
            &h,
            &Problem1D::symmetric(1.0, 1.0, 0.5),
            &FdOptions::default(),
        )
        .unwrap();
        assert!(sol.residual < 1e-10);
        let res = Resolvent::new(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap(), 1.0, 1.0).unwrap();
        let pv = PiecewiseValue::solve(res, 0.5, &ThresholdOptions::default()).unwrap();
        let err = grid
            .points()
            .zip(&sol.values)
            .map(|(x, u)| (pv.value(x) - u).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-2, "{err}");
        for i in 1..grid.n - 1 {
            let s = sol.values[i + 1] - 2.0 * sol.values[i] + sol.values[i - 1];
            assert!(s >= -1e-9);
        }
    }

    #[test]
    fn interpolation_hits_nodes() {
        let grid = Grid1D::new(0.0, 1.0, 5).unwrap();
        let sol =
            VISolution1D::from_values(grid, vec![0.0, 1.0, 4.0, 9.0, 16.0], 100.0, 100.0, 0.0)
                .unwrap();
        assert_eq!(sol.interpolate(0.25), 1.0);
        assert_eq!(sol.interpolate(0.375), 2.5);
        assert_eq!(sol.interpolate(1.0), 16.0);
        assert_eq!(sol.interpolate(2.0), 16.0);
    }
}
