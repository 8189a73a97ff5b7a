//! Banded LU without pivoting. The policy matrices are M-matrices, for which
//! elimination without pivoting is stable.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(
            i.abs_diff(j) <= self.bw,
            "entry ({i}, {j}) outside band {}",
            self.bw
        );
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// `A·x`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw + 1).min(self.n);
                (lo..hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// Factors in place into unit-lower `L` and upper `U`.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, bw, w) = (self.n, self.bw, 2 * self.bw + 1);
        for k in 0..n {
            let pivot = self.data[k * w + bw];
            if !(pivot.abs() > 1e-300) || !pivot.is_finite() {
                return Err(Error::SingularSystem(k));
            }
            let end = (k + bw + 1).min(n);
            for i in k + 1..end {
                let ik = i * w + (k + bw - i);
                let l = self.data[ik] / pivot;
                if l == 0.0 {
                    continue;
                }
                self.data[ik] = l;
                let (head, tail) = self.data.split_at_mut(i * w);
                let row_k = &head[k * w + bw + 1..k * w + bw + (end - k)];
                let row_i = &mut tail[(k + 1 + bw - i)..(end + bw - i)];
                for (a, b) in row_i.iter_mut().zip(row_k) {
                    *a -= l * b;
                }
            }
        }
        Ok(BandedLu {
            n,
            bw,
            data: self.data,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedLu {
    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, 2 * self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = b[i];
            for j in lo..i {
                s -= self.data[i * w + (j + bw - i)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + bw + 1).min(n);
            let mut s = b[i];
            for j in i + 1..hi {
                s -= self.data[i * w + (j + bw - i)] * b[j];
            }
            b[i] = s / self.data[i * w + bw];
        }
    }

    /// Recovers the storage for reuse.
    pub fn into_matrix(self) -> BandedMatrix {
        BandedMatrix {
            n: self.n,
            bw: self.bw,
            data: self.data,
        }
    }
}
