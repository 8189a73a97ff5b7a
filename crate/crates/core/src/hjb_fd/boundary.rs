//! Free-boundary extraction from labelled solutions.

use super::one_d::VISolution1D;
use super::two_d::{Label2D, VISolution2D};
use crate::error::{invalid, Error, Result};
use crate::valuefn::Branch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeBoundary1D {
    /// Edge below which the state is pushed up.
    pub lower: Option<f64>,
    /// Edge above which the state is pushed down.
    pub upper: Option<f64>,
}

/// Zero of the line through `(xa, ga)`, `(xb, gb)` when the sign changes,
/// `xb` otherwise.
fn crossing(xa: f64, ga: f64, xb: f64, gb: f64) -> f64 {
    if ga < 0.0 && gb >= 0.0 {
        xa + (-ga) / (gb - ga) * (xb - xa)
    } else {
        xb
    }
}

/// Boundaries of the continuation run around the minimum of `u`.
///
/// Each side takes the first gradient node and refines by linear
/// interpolation of `|u′| − K` between the two adjacent midpoint slopes.
pub fn extract_free_boundary_1d(
    sol: &VISolution1D,
    k_plus: f64,
    k_minus: f64,
) -> Result<FreeBoundary1D> {
    let n = sol.grid.n;
    let d = sol.grid.spacing();
    let u = &sol.values;
    let center = (0..n)
        .filter(|&i| sol.labels[i] == Branch::Interior)
        .min_by(|&a, &b| u[a].total_cmp(&u[b]))
        .ok_or(Error::BoundaryNotFound)?;
    let mid = |k: usize| sol.grid.x(k) + 0.5 * d;
    let slope = |k: usize| (u[k + 1] - u[k]) / d;

    let mut upper = None;
    if let Some(i) = (center..n).find(|&i| sol.labels[i] != Branch::Interior) {
        if sol.labels[i] == Branch::Upper && i >= 2 {
            upper = Some(crossing(
                mid(i - 2),
                slope(i - 2) - k_minus,
                mid(i - 1),
                slope(i - 1) - k_minus,
            ));
        }
    }
    let mut lower = None;
    if let Some(i) = (0..=center)
        .rev()
        .find(|&i| sol.labels[i] != Branch::Interior)
    {
        if sol.labels[i] == Branch::Lower && i + 2 < n {
            lower = Some(crossing(
                mid(i + 1),
                -slope(i + 1) - k_plus,
                mid(i),
                -slope(i) - k_plus,
            ));
        }
    }
    if lower.is_none() && upper.is_none() {
        return Err(Error::BoundaryNotFound);
    }
    Ok(FreeBoundary1D { lower, upper })
}

/// Per-row (fixed `x²`) activation frontier as `(x¹, x²)` points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frontier2D {
    /// Left end of each row's continuation run.
    pub left: Vec<[f64; 2]>,
    /// Right end of each row's continuation run.
    pub right: Vec<[f64; 2]>,
}

/// Frontier points sit midway between the last continuation node and the
/// first gradient node of a row.
pub fn extract_free_boundary_2d(sol: &VISolution2D) -> Result<Frontier2D> {
    if !sol.labels.iter().any(|l| l.is_active()) {
        return Err(Error::BoundaryNotFound);
    }
    let g = &sol.grid;
    let mut out = Frontier2D::default();
    for j in 0..g.x2.n {
        let x2 = g.x2.x(j);
        let interior: Vec<usize> = (0..g.x1.n)
            .filter(|&i| sol.label(i, j) == Label2D::Interior)
            .collect();
        let (Some(&first), Some(&last)) = (interior.first(), interior.last()) else {
            continue;
        };
        if first > 0 && sol.label(first - 1, j).is_active() {
            out.left
                .push([0.5 * (g.x1.x(first - 1) + g.x1.x(first)), x2]);
        }
        if last + 1 < g.x1.n && sol.label(last + 1, j).is_active() {
            out.right
                .push([0.5 * (g.x1.x(last) + g.x1.x(last + 1)), x2]);
        }
    }
    Ok(out)
}

/// Width in `y = x¹ − x²` of the continuation run along the antidiagonal
/// `(x¹_i, x²_{n−1−i})` around its smallest value.
pub fn antidiagonal_width(sol: &VISolution2D) -> Result<f64> {
    let g = &sol.grid;
    if g.x1.n != g.x2.n {
        return Err(invalid("antidiagonal needs a square grid"));
    }
    let n = g.x1.n;
    let node = |k: usize| (k, n - 1 - k);
    let y = |k: usize| g.x1.x(k) - g.x2.x(n - 1 - k);
    let label = |k: usize| {
        let (i, j) = node(k);
        sol.label(i, j)
    };
    let center = (0..n)
        .filter(|&k| label(k) == Label2D::Interior)
        .min_by(|&a, &b| {
            let (va, vb) = (
                sol.value(node(a).0, node(a).1),
                sol.value(node(b).0, node(b).1),
            );
            va.total_cmp(&vb)
        })
        .ok_or(Error::BoundaryNotFound)?;
    let hi = (center..n)
        .find(|&k| label(k) != Label2D::Interior)
        .ok_or(Error::BoundaryNotFound)?;
    let lo = (0..=center)
        .rev()
        .find(|&k| label(k) != Label2D::Interior)
        .ok_or(Error::BoundaryNotFound)?;
    if !label(hi).is_active() || !label(lo).is_active() {
        return Err(Error::BoundaryNotFound);
    }
    Ok(0.5 * (y(hi) + y(hi - 1)) - 0.5 * (y(lo) + y(lo + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjb_fd::{sample, solve_vi_1d, Problem1D};
    use crate::hjb_fd::{FdOptions, Grid1D};
    use crate::model::cost::RunningCost;
    use crate::model::resolvent::Resolvent;
    use crate::thresholds::ThresholdOptions;
    use crate::valuefn::PiecewiseValue;

    #[test]
    fn sampled_analytic_value_recovers_threshold() {
        let res = Resolvent::new(RunningCost::quadratic(1.0, 0.0, 0.0).unwrap(), 1.0, 1.0).unwrap();
        let pv = PiecewiseValue::solve(res, 0.5, &ThresholdOptions::default()).unwrap();
        let grid = Grid1D::symmetric(3.0, 601).unwrap();
        let values = sample(&grid, |x| pv.value(x));
        let sol = VISolution1D::from_values(grid, values, 0.5, 0.5, 1e-9).unwrap();
        let fb = extract_free_boundary_1d(&sol, 0.5, 0.5).unwrap();
        let c = pv.threshold();
        assert!((fb.upper.unwrap() - c).abs() <= grid.spacing(), "{:?}", fb);
        assert!((fb.lower.unwrap() + c).abs() <= grid.spacing(), "{:?}", fb);
    }

    #[test]
    fn huge_cost_has_no_boundary() {
        let grid = Grid1D::symmetric(2.0, 201).unwrap();
        let h = sample(&grid, |x| x * x);
        let sol = solve_vi_1d(
            &grid,
            &h,
            &Problem1D::symmetric(1.0, 1.0, 1e6),
            &FdOptions::default(),
        )
        .unwrap();
        assert!(matches!(
            extract_free_boundary_1d(&sol, 1e6, 1e6),
            Err(Error::BoundaryNotFound)
        ));
    }

    #[test]
    fn cheaper_downward_control_brings_upper_edge_closer() {
        let grid = Grid1D::symmetric(4.0, 801).unwrap();
        let h = sample(&grid, |x| x * x);
        let problem = Problem1D {
            sigma: 1.0,
            rho: 1.0,
            k_plus: 1.0,
            k_minus: 0.5,
            mu: 0.0,
        };
        let sol = solve_vi_1d(&grid, &h, &problem, &FdOptions::default()).unwrap();
        let fb = extract_free_boundary_1d(&sol, 1.0, 0.5).unwrap();
        assert!(fb.upper.unwrap() < -fb.lower.unwrap(), "{:?}", fb);
    }
}
