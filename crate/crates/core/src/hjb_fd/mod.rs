//! Finite-difference policy iteration for the gradient-constrained HJB
//! variational inequality in one and two dimensions.

pub mod banded;
mod boundary;
mod export;
mod howard;
mod one_d;
mod two_d;

pub use boundary::{
    antidiagonal_width, extract_free_boundary_1d, extract_free_boundary_2d, FreeBoundary1D,
    Frontier2D,
};
pub use export::{write_frontier_csv, write_solution_1d_csv, write_solution_2d_csv};
pub use howard::IterationRecord;
pub use one_d::{sample, solve_vi_1d, Problem1D, VISolution1D};
pub use two_d::{solve_vi_2d, EdgeRule, Label2D, Method2D, VISolution2D};

use crate::error::{invalid, Result};

/// Uniform grid `lo = x_0 < … < x_{n−1} = hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let g = Self { lo, hi, n };
        g.validate()?;
        Ok(g)
    }

    /// Symmetric grid `[−half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(invalid(format!(
                "grid bounds [{}, {}] are not an interval",
                self.lo, self.hi
            )));
        }
        if self.n < 5 {
            return Err(invalid(format!(
                "grid needs at least 5 nodes, got {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Checks that `[−2c, 2c]` fits inside the grid.
    pub fn check_contains(&self, c: f64) -> Result<()> {
        if self.lo > -2.0 * c || self.hi < 2.0 * c {
            return Err(invalid(format!(
                "grid [{}, {}] does not contain [-{}, {}] with margin",
                self.lo,
                self.hi,
                2.0 * c,
                2.0 * c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x1: Grid1D,
    pub x2: Grid1D,
}

impl Grid2D {
    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        let g = Grid1D::symmetric(half_width, n)?;
        Ok(Self { x1: g, x2: g })
    }

    pub fn validate(&self) -> Result<()> {
        self.x1.validate()?;
        self.x2.validate()
    }

    pub fn len(&self) -> usize {
        self.x1.n * self.x2.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index, `x1` major.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.x2.n + j
    }

    pub(crate) fn same_spacing(&self) -> bool {
        (self.x1.spacing() - self.x2.spacing()).abs() <= 1e-12 * self.x1.spacing()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

impl FdOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(invalid("tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}
