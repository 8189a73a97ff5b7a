//! Policy iteration for discrete obstacle systems `max_b (A_b u − f_b) = 0`.
//!
//! Every node carries an optional PDE row and a list of link rows
//! `u_i − u_t = offset`. Gradient constraints and boundary closures are both
//! links. Rows are pre-scaled so every branch is measured in units of `u`.

use std::collections::HashSet;
use std::hash::{DefaultHasher, Hash, Hasher};

use super::banded::BandedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Link {
    pub target: usize,
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    /// Scaled stencil and right-hand side; `None` on closure nodes.
    pub pde: Option<(Vec<(usize, f64)>, f64)>,
    pub links: Vec<Link>,
}

impl Node {
    fn forced(&self) -> bool {
        self.pde.is_none()
    }
}

/// Choice per node: `0` is the PDE row, `k + 1` is link `k`. Closure nodes
/// without a PDE row store their link index directly as `k + 1`.
pub(crate) type Policy = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `max_i |max_b B_b(u)_i|` after the solve.
    pub residual: f64,
    /// Nodes whose branch changed in the subsequent improvement step.
    pub changed: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct HowardOutput {
    pub values: Vec<f64>,
    pub policy: Policy,
    pub log: Vec<IterationRecord>,
    pub residual: f64,
}

pub(crate) struct System {
    pub nodes: Vec<Node>,
}

impl System {
    fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some((stencil, _)) = &n.pde {
                for &(j, _) in stencil {
                    bw = bw.max(i.abs_diff(j));
                }
            }
            for l in &n.links {
                bw = bw.max(i.abs_diff(l.target));
            }
        }
        bw.max(1)
    }

    fn branch_value(&self, u: &[f64], i: usize, choice: usize) -> f64 {
        let node = &self.nodes[i];
        if choice == 0 {
            let (stencil, rhs) = node.pde.as_ref().expect("PDE branch on closure node");
            stencil.iter().map(|&(j, c)| c * u[j]).sum::<f64>() - rhs
        } else {
            let l = node.links[choice - 1];
            u[i] - u[l.target] - l.offset
        }
    }

    /// Largest branch value at node `i`, and the branch attaining it.
    pub fn best_branch(&self, u: &[f64], i: usize) -> (usize, f64) {
        let node = &self.nodes[i];
        let first = if node.forced() { 1 } else { 0 };
        let mut best = (first, self.branch_value(u, i, first));
        for b in first + 1..=node.links.len() {
            let v = self.branch_value(u, i, b);
            if v > best.1 {
                best = (b, v);
            }
        }
        best
    }

    /// All branch values at node `i`, PDE first when present.
    pub fn branch_values(&self, u: &[f64], i: usize) -> Vec<f64> {
        let node = &self.nodes[i];
        let first = if node.forced() { 1 } else { 0 };
        (first..=node.links.len())
            .map(|b| self.branch_value(u, i, b))
            .collect()
    }

    fn residual(&self, u: &[f64]) -> f64 {
        (0..self.nodes.len())
            .map(|i| self.best_branch(u, i).1.abs())
            .fold(0.0, f64::max)
    }

    fn target(&self, policy: &Policy, i: usize) -> Option<usize> {
        (policy[i] > 0).then(|| self.nodes[i].links[policy[i] - 1].target)
    }

    /// Breaks cycles of link rows, which would make the system singular, by
    /// reverting the least-violated node on each cycle to its PDE row.
    fn break_cycles(&self, policy: &mut Policy, u: &[f64]) -> Result<()> {
        let n = self.nodes.len();
        let mut state = vec![0u8; n];
        let mut stack = Vec::new();
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut i = start;
            loop {
                if state[i] == 2 {
                    break;
                }
                if state[i] == 1 {
                    let pos = stack.iter().position(|&s| s == i).expect("node on stack");
                    let cycle = &stack[pos..];
                    let fix = cycle
                        .iter()
                        .copied()
                        .filter(|&k: &usize| !self.nodes[k].forced())
                        .max_by(|&a, &b| {
                            self.branch_value(u, a, 0)
                                .total_cmp(&self.branch_value(u, b, 0))
                        })
                        .ok_or_else(|| Error::Invariant("cycle of boundary closures".into()))?;
                    policy[fix] = 0;
                    break;
                }
                state[i] = 1;
                stack.push(i);
                match self.target(policy, i) {
                    Some(t) => i = t,
                    None => break,
                }
            }
            for &k in &stack {
                state[k] = 2;
            }
            stack.clear();
        }
        Ok(())
    }

    fn solve_policy(&self, policy: &Policy, m: &mut BandedMatrix) -> Result<Vec<f64>> {
        m.clear();
        let mut rhs = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if policy[i] == 0 {
                let (stencil, f) = node.pde.as_ref().expect("PDE branch on closure node");
                for &(j, c) in stencil {
                    m.add(i, j, c);
                }
                rhs[i] = *f;
            } else {
                let l = node.links[policy[i] - 1];
                m.add(i, i, 1.0);
                m.add(i, l.target, -1.0);
                rhs[i] = l.offset;
            }
        }
        let lu = std::mem::replace(m, BandedMatrix::zeros(0, 0)).factor()?;
        lu.solve(&mut rhs);
        *m = lu.into_matrix();
        Ok(rhs)
    }

    /// Howard iteration from `policy`. Ties keep the current branch.
    pub fn solve(&self, mut policy: Policy, tol: f64, max_iter: usize) -> Result<HowardOutput> {
        let n = self.nodes.len();
        let mut m = BandedMatrix::zeros(n, self.bandwidth());
        let mut seen = HashSet::new();
        let mut log = Vec::new();
        let mut history = Vec::new();
        let mut u = vec![0.0; n];
        self.break_cycles(&mut policy, &u)?;
        for iteration in 1..=max_iter {
            u = self.solve_policy(&policy, &mut m)?;
            let residual = self.residual(&u);
            history.push(residual);
            if residual < tol {
                log.push(IterationRecord {
                    iteration,
                    residual,
                    changed: 0,
                });
                return Ok(HowardOutput {
                    values: u,
                    policy,
                    log,
                    residual,
                });
            }
            let mut next = policy.clone();
            for (i, choice) in next.iter_mut().enumerate() {
                let (b, v) = self.best_branch(&u, i);
                if v > self.branch_value(&u, i, *choice) {
                    *choice = b;
                }
            }
            self.break_cycles(&mut next, &u)?;
            let changed = next.iter().zip(&policy).filter(|(a, b)| a != b).count();
            log.push(IterationRecord {
                iteration,
                residual,
                changed,
            });
            if changed == 0 {
                return Err(Error::Accuracy {
                    achieved: residual,
                    tolerance: tol,
                });
            }
            let mut hasher = DefaultHasher::new();
            next.hash(&mut hasher);
            if !seen.insert(hasher.finish()) {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    residual,
                    history,
                });
            }
            policy = next;
        }
        let residual = history.last().copied().unwrap_or(f64::INFINITY);
        Err(Error::NonConvergence {
            iterations: max_iter,
            residual,
            history,
        })
    }
}
