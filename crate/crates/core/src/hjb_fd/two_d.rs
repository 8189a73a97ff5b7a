//! Two-player variational inequality `max{ρu − 𝓛u − H, β(∇u) − 1} = 0` with
//! gradient bounds `−LᵢKᵢ⁺ ≤ ∂ᵢu ≤ LᵢKᵢ⁻`.

use super::howard::{IterationRecord, Link, Node, System};
use super::one_d::{sample, solve_vi_1d, Problem1D};
use super::{FdOptions, Grid1D, Grid2D};
use crate::error::{invalid, Result};
use crate::model::game::{GameSpec, Payoff};
use crate::valuefn::Branch;

/// Active branch at a node. `Down(i)`: player `i` decreases `xⁱ`, so
/// `∂ᵢu = LᵢKᵢ⁻`. `Up(i)`: player `i` increases `xⁱ`, so `∂ᵢu = −LᵢKᵢ⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label2D {
    Interior,
    Down(usize),
    Up(usize),
    /// Edge node closed by diagonal translation.
    Closure,
}

impl Label2D {
    pub fn id(self) -> String {
        match self {
            Label2D::Interior => "interior".into(),
            Label2D::Down(i) => format!("upper_gradient_{}", i + 1),
            Label2D::Up(i) => format!("lower_gradient_{}", i + 1),
            Label2D::Closure => "closure".into(),
        }
    }

    pub fn is_active(self) -> bool {
        matches!(self, Label2D::Down(_) | Label2D::Up(_))
    }
}

/// Closure at the truncation edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeRule {
    /// Translation for payoffs of `x¹ − x²` on equally spaced grids,
    /// linear growth otherwise.
    #[default]
    Auto,
    /// Zero normal curvature, competing with the outward gradient bound.
    LinearGrowth,
    /// `u(x) = u(x ± (Δ, Δ))`, exact when `H` depends on `x¹ − x²` only.
    DiagonalTranslation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method2D {
    Direct,
    /// Solved in `y = x¹ − x²` on the 1-D grid and sampled back.
    Rotated,
}

#[derive(Debug, Clone)]
pub struct VISolution2D {
    pub grid: Grid2D,
    /// `x1`-major values.
    pub values: Vec<f64>,
    pub labels: Vec<Label2D>,
    pub log: Vec<IterationRecord>,
    pub residual: f64,
    pub method: Method2D,
    pub edge_rule: EdgeRule,
    pub warnings: Vec<String>,
}

impl VISolution2D {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn label(&self, i: usize, j: usize) -> Label2D {
        self.labels[self.grid.index(i, j)]
    }
}

fn covariance(spec: &GameSpec) -> [[f64; 2]; 2] {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let s = &spec.sigma;
    [
        [dot(&s[0], &s[0]), dot(&s[0], &s[1])],
        [dot(&s[1], &s[0]), dot(&s[1], &s[1])],
    ]
}

/// Solves the two-player problem on `grid`.
///
/// Interior rows use the monotone nine-point stencil for the cross
/// derivative. When `|a₁₂|` is too large for that stencil and the payoff
/// depends on `x¹ − x²`, the problem is solved in the rotated coordinate;
/// otherwise the solve proceeds with a warning.
pub fn solve_vi_2d(
    grid: &Grid2D,
    spec: &GameSpec,
    edge: EdgeRule,
    opts: &FdOptions,
) -> Result<VISolution2D> {
    grid.validate()?;
    spec.validate()?;
    opts.validate()?;
    if spec.players() != 2 {
        return Err(invalid("the 2-D solver needs exactly two players"));
    }
    let a = covariance(spec);
    let (d1, d2) = (grid.x1.spacing(), grid.x2.spacing());
    let monotone = a[0][0] / d1 >= a[0][1].abs() / d2 && a[1][1] / d2 >= a[0][1].abs() / d1;
    let difference = matches!(spec.payoff, Payoff::Difference(_));
    let mut warnings = Vec::new();
    if !monotone {
        if difference && grid.same_spacing() {
            return solve_rotated(grid, spec, a, opts);
        }
        warnings.push(format!(
            "cross covariance {} breaks the monotone stencil at spacing ({d1}, {d2}); results may be unreliable",
            a[0][1]
        ));
    }
    let edge = match edge {
        EdgeRule::Auto if difference && grid.same_spacing() => EdgeRule::DiagonalTranslation,
        EdgeRule::Auto => EdgeRule::LinearGrowth,
        EdgeRule::DiagonalTranslation if !grid.same_spacing() => {
            return Err(invalid(
                "diagonal translation needs equal spacing on both axes",
            ));
        }
        e => e,
    };
    let cost = spec.joint_cost()?;
    let (n1, n2) = (grid.x1.n, grid.x2.n);
    let s2 = d1.min(d2).powi(2);
    let bound = |i: usize, plus: bool| {
        spec.weights[i]
            * if plus {
                spec.k_plus[i]
            } else {
                spec.k_minus[i]
            }
    };

    let mut nodes = Vec::with_capacity(grid.len());
    let mut kinds: Vec<Vec<Label2D>> = Vec::with_capacity(grid.len());
    for i in 0..n1 {
        for j in 0..n2 {
            let idx = |a: usize, b: usize| grid.index(a, b);
            let h = cost.value(&[grid.x1.x(i), grid.x2.x(j)]);
            let on_edge1 = i == 0 || i == n1 - 1;
            let on_edge2 = j == 0 || j == n2 - 1;
            if on_edge1 || on_edge2 {
                if edge == EdgeRule::DiagonalTranslation {
                    let target = if i + 3 <= n1 && j + 3 <= n2 {
                        Some(idx(i + 1, j + 1))
                    } else if i >= 2 && j >= 2 {
                        Some(idx(i - 1, j - 1))
                    } else {
                        None
                    };
                    if let Some(target) = target {
                        nodes.push(Node {
                            pde: None,
                            links: vec![Link {
                                target,
                                offset: 0.0,
                            }],
                        });
                        kinds.push(vec![Label2D::Closure]);
                        continue;
                    }
                }
                // Linear growth: zero normal curvature, tangential diffusion
                // where available, drift only when it points inward.
                let mut stencil = vec![(idx(i, j), spec.rho * s2)];
                let mut links = Vec::new();
                let mut kind = Vec::new();
                let mut diag = spec.rho * s2;
                if !on_edge2 {
                    let c2 = 0.5 * a[1][1] * s2 / (d2 * d2);
                    diag += 2.0 * c2;
                    stencil.push((idx(i, j - 1), -c2));
                    stencil.push((idx(i, j + 1), -c2));
                }
                if !on_edge1 {
                    let c1 = 0.5 * a[0][0] * s2 / (d1 * d1);
                    diag += 2.0 * c1;
                    stencil.push((idx(i - 1, j), -c1));
                    stencil.push((idx(i + 1, j), -c1));
                }
                for (axis, k, n, d) in [(0usize, i, n1, d1), (1, j, n2, d2)] {
                    let mu = spec.mu[axis] * s2 / d;
                    let step = |k2: usize| if axis == 0 { idx(k2, j) } else { idx(i, k2) };
                    if mu > 0.0 && k + 1 < n {
                        diag += mu;
                        stencil.push((step(k + 1), -mu));
                    } else if mu < 0.0 && k > 0 {
                        diag -= mu;
                        stencil.push((step(k - 1), mu));
                    }
                    if k + 1 == n {
                        links.push(Link {
                            target: step(k - 1),
                            offset: bound(axis, false) * d,
                        });
                        kind.push(Label2D::Down(axis));
                    }
                    if k == 0 {
                        links.push(Link {
                            target: step(1),
                            offset: bound(axis, true) * d,
                        });
                        kind.push(Label2D::Up(axis));
                    }
                }
                stencil[0].1 = diag;
                nodes.push(Node {
                    pde: Some((stencil, s2 * h)),
                    links,
                });
                kinds.push(kind);
                continue;
            }
            let c1 = 0.5 * a[0][0] * s2 / (d1 * d1);
            let c2 = 0.5 * a[1][1] * s2 / (d2 * d2);
            let e = 0.5 * a[0][1].abs() * s2 / (d1 * d2);
            let mut diag = 2.0 * c1 + 2.0 * c2 - 2.0 * e + spec.rho * s2;
            let mut west = -c1 + e;
            let mut east = -c1 + e;
            let mut south = -c2 + e;
            let mut north = -c2 + e;
            let m1 = spec.mu[0] * s2 / d1;
            let m2 = spec.mu[1] * s2 / d2;
            if m1 > 0.0 {
                diag += m1;
                east -= m1;
            } else {
                diag -= m1;
                west += m1;
            }
            if m2 > 0.0 {
                diag += m2;
                north -= m2;
            } else {
                diag -= m2;
                south += m2;
            }
            let mut stencil = vec![
                (idx(i, j), diag),
                (idx(i - 1, j), west),
                (idx(i + 1, j), east),
                (idx(i, j - 1), south),
                (idx(i, j + 1), north),
            ];
            if e > 0.0 {
                if a[0][1] > 0.0 {
                    stencil.push((idx(i + 1, j + 1), -e));
                    stencil.push((idx(i - 1, j - 1), -e));
                } else {
                    stencil.push((idx(i + 1, j - 1), -e));
                    stencil.push((idx(i - 1, j + 1), -e));
                }
            }
            nodes.push(Node {
                pde: Some((stencil, s2 * h)),
                links: vec![
                    Link {
                        target: idx(i - 1, j),
                        offset: bound(0, false) * d1,
                    },
                    Link {
                        target: idx(i + 1, j),
                        offset: bound(0, true) * d1,
                    },
                    Link {
                        target: idx(i, j - 1),
                        offset: bound(1, false) * d2,
                    },
                    Link {
                        target: idx(i, j + 1),
                        offset: bound(1, true) * d2,
                    },
                ],
            });
            kinds.push(vec![
                Label2D::Down(0),
                Label2D::Up(0),
                Label2D::Down(1),
                Label2D::Up(1),
            ]);
        }
    }
    let initial = nodes.iter().map(|n| usize::from(n.pde.is_none())).collect();
    let system = System { nodes };
    let out = system.solve(initial, opts.tol, opts.max_iter)?;
    let labels = out
        .policy
        .iter()
        .zip(&kinds)
        .map(|(&p, k)| if p == 0 { Label2D::Interior } else { k[p - 1] })
        .collect();
    Ok(VISolution2D {
        grid: *grid,
        values: out.values,
        labels,
        log: out.log,
        residual: out.residual,
        method: Method2D::Direct,
        edge_rule: edge,
        warnings,
    })
}

fn solve_rotated(
    grid: &Grid2D,
    spec: &GameSpec,
    a: [[f64; 2]; 2],
    opts: &FdOptions,
) -> Result<VISolution2D> {
    let Payoff::Difference(h) = &spec.payoff else {
        return Err(invalid("rotated solve needs a payoff of x1 - x2"));
    };
    let (n1, n2) = (grid.x1.n, grid.x2.n);
    let line = Grid1D::new(
        grid.x1.lo - grid.x2.hi,
        grid.x1.hi - grid.x2.lo,
        n1 + n2 - 1,
    )?;
    let var = a[0][0] - 2.0 * a[0][1] + a[1][1];
    if !(var > 0.0) {
        return Err(crate::error::Error::DegenerateDiffusion);
    }
    let lk = |i: usize, plus: bool| {
        spec.weights[i]
            * if plus {
                spec.k_plus[i]
            } else {
                spec.k_minus[i]
            }
    };
    // Raising y: player 1 up or player 2 down; lowering y: the reverse.
    let (raise, raise_label) = if lk(0, true) <= lk(1, false) {
        (lk(0, true), Label2D::Up(0))
    } else {
        (lk(1, false), Label2D::Down(1))
    };
    let (lower, lower_label) = if lk(0, false) <= lk(1, true) {
        (lk(0, false), Label2D::Down(0))
    } else {
        (lk(1, true), Label2D::Up(1))
    };
    let problem = Problem1D {
        sigma: var.sqrt(),
        rho: spec.rho,
        k_plus: raise,
        k_minus: lower,
        mu: spec.mu[0] - spec.mu[1],
    };
    let hs = sample(&line, |y| h.value(y));
    let sol = solve_vi_1d(&line, &hs, &problem, opts)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut labels = Vec::with_capacity(grid.len());
    for i in 0..n1 {
        for j in 0..n2 {
            let k = i + n2 - 1 - j;
            values.push(sol.values[k]);
            labels.push(match sol.labels[k] {
                Branch::Interior => Label2D::Interior,
                Branch::Upper => lower_label,
                Branch::Lower => raise_label,
            });
        }
    }
    Ok(VISolution2D {
        grid: *grid,
        values,
        labels,
        log: sol.log,
        residual: sol.residual,
        method: Method2D::Rotated,
        edge_rule: EdgeRule::Auto,
        warnings: vec![format!(
            "cross covariance {} breaks the monotone stencil; solved in x1 - x2",
            a[0][1]
        )],
    })
}
