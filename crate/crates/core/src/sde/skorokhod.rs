//! Discrete two-sided Skorokhod map on a band `[−c, c]`.

use crate::error::{Error, Result};

/// Output of the reflection: states and cumulative pushes, all of length
/// `increments.len() + 1`. Index 0 holds the state after any initial jump.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflected {
    pub states: Vec<f64>,
    /// Cumulative upward push (applied at `−c`).
    pub xi_plus: Vec<f64>,
    /// Cumulative downward push (applied at `+c`).
    pub xi_minus: Vec<f64>,
}

/// Clamps `x` into `[−c, c]` and returns `(x', push up, push down)`.
#[inline]
pub fn project(x: f64, c: f64) -> (f64, f64, f64) {
    if x > c {
        (c, 0.0, x - c)
    } else if x < -c {
        (-c, -c - x, 0.0)
    } else {
        (x, 0.0, 0.0)
    }
}

pub fn check_band(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidBand(c));
    }
    Ok(())
}

/// Reflects the driver `x₀ + Σ Δw` into `[−c, c]` by projecting after every
/// increment. A start outside the band is an immediate jump booked at index 0.
pub fn skorokhod_map_1d(x0: f64, increments: &[f64], c: f64) -> Result<Reflected> {
    check_band(c)?;
    let n = increments.len() + 1;
    let mut states = Vec::with_capacity(n);
    let mut xi_plus = Vec::with_capacity(n);
    let mut xi_minus = Vec::with_capacity(n);
    let (mut x, up, down) = project(x0, c);
    let (mut cum_up, mut cum_down) = (up, down);
    states.push(x);
    xi_plus.push(cum_up);
    xi_minus.push(cum_down);
    for &dw in increments {
        let (nx, up, down) = project(x + dw, c);
        x = nx;
        cum_up += up;
        cum_down += down;
        states.push(x);
        xi_plus.push(cum_up);
        xi_minus.push(cum_down);
    }
    Ok(Reflected {
        states,
        xi_plus,
        xi_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two-sided Skorokhod map of the piecewise-constant driver as the
    /// fixed point of the running-maximum formulas
    /// `ξ⁻ₜ = max(0, max_{u≤t}(w_u + ξ⁺_u − c))`, `ξ⁺ₜ = max(0, max_{u≤t}(−w_u + ξ⁻_u − c))`.
    fn fixed_point(x0: f64, increments: &[f64], c: f64) -> Reflected {
        let mut w = vec![x0];
        for dw in increments {
            w.push(w.last().unwrap() + dw);
        }
        let n = w.len();
        let mut up = vec![0.0; n];
        let mut down = vec![0.0; n];
        for _ in 0..10 * n + 10 {
            let (mut run_d, mut run_u) = (0.0f64, 0.0f64);
            let mut new_down = vec![0.0; n];
            let mut new_up = vec![0.0; n];
            for k in 0..n {
                run_d = run_d.max(w[k] + up[k] - c);
                run_u = run_u.max(-w[k] + down[k] - c);
                new_down[k] = run_d;
                new_up[k] = run_u;
            }
            let change = (0..n)
                .map(|k| (new_down[k] - down[k]).abs().max((new_up[k] - up[k]).abs()))
                .fold(0.0, f64::max);
            down = new_down;
            up = new_up;
            if change < 1e-15 {
                break;
            }
        }
        let states = (0..n).map(|k| w[k] + up[k] - down[k]).collect();
        Reflected {
            states,
            xi_plus: up,
            xi_minus: down,
        }
    }

    #[test]
    fn zero_driver() {
        let r = skorokhod_map_1d(0.0, &[0.0; 5], 1.0).unwrap();
        assert!(r
            .states
            .iter()
            .chain(&r.xi_plus)
            .chain(&r.xi_minus)
            .all(|&v| v == 0.0));
    }

    #[test]
    fn initial_jump() {
        let r = skorokhod_map_1d(2.0, &[0.0], 1.0).unwrap();
        assert_eq!(r.states[0], 1.0);
        assert_eq!(r.xi_minus[0], 1.0);
        assert_eq!(r.xi_plus[0], 0.0);
    }

    #[test]
    fn staircase_overshoot() {
        let r = skorokhod_map_1d(0.0, &[0.5, 0.5, 0.3], 1.0).unwrap();
        assert_eq!(r.states, vec![0.0, 0.5, 1.0, 1.0]);
        assert!((r.xi_minus[3] - 0.3).abs() < 1e-15);
        assert_eq!(r.xi_plus[3], 0.0);
    }

    #[test]
    fn rejects_bad_band() {
        assert!(skorokhod_map_1d(0.0, &[], 0.0).is_err());
        assert!(skorokhod_map_1d(0.0, &[], f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn projection_matches_fixed_point(
            c in 0.2f64..2.0,
            x0 in -3.0f64..3.0,
            raw in prop::collection::vec(-1.0f64..1.0, 1..40),
        ) {
            let incs: Vec<f64> = raw.iter().map(|v| v * 1.9 * c).collect();
            let fast = skorokhod_map_1d(x0, &incs, c).unwrap();
            let slow = fixed_point(x0, &incs, c);
            for k in 0..fast.states.len() {
                prop_assert!((fast.states[k] - slow.states[k]).abs() < 1e-9);
                prop_assert!((fast.xi_plus[k] - slow.xi_plus[k]).abs() < 1e-9);
                prop_assert!((fast.xi_minus[k] - slow.xi_minus[k]).abs() < 1e-9);
            }
        }

        #[test]
        fn pushes_only_at_edges(
            c in 0.2f64..2.0,
            raw in prop::collection::vec(-1.0f64..1.0, 1..60),
        ) {
            let r = skorokhod_map_1d(0.0, &raw, c).unwrap();
            for k in 1..r.states.len() {
                prop_assert!(r.states[k].abs() <= c);
                prop_assert!(r.xi_plus[k] >= r.xi_plus[k - 1]);
                prop_assert!(r.xi_minus[k] >= r.xi_minus[k - 1]);
                if r.xi_plus[k] > r.xi_plus[k - 1] {
                    prop_assert_eq!(r.states[k], -c);
                }
                if r.xi_minus[k] > r.xi_minus[k - 1] {
                    prop_assert_eq!(r.states[k], c);
                }
            }
        }
    }
}
