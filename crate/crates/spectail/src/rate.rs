//! Upper-tail rate function for the largest eigenvalue of a sparse Gaussian
//! weighted network, and the transition ladder of optimal clique sizes.
//!
//! For excess parameter `delta > 0` the decay exponent of
//! `P(lambda_1 >= sqrt(2 (1 + delta) log n))` is
//!
//! ```text
//! psi(delta) = min_{k >= 2} phi(delta, k),
//! phi(delta, k) = k (k - 3) / 2 + ((1 + delta) / 2) * k / (k - 1),
//! ```
//!
//! where `k` ranges over clique sizes. `phi(delta, .)` extended to real
//! arguments is strictly convex on `(1, infinity)`, so the discrete minimum
//! is attained at one value of `k` or at two consecutive ones; as `delta`
//! grows the minimizer climbs through the transition ladder
//! `delta_k = 2 k (k - 1)^2 - 1` (the exact tie points `phi(delta_k, k) =
//! phi(delta_k, k + 1)`).

use serde::Serialize;
use thiserror::Error;

/// Relative tolerance under which two values of `phi` count as tied.
const TIE_REL_TOL: f64 = 1e-12;

/// Absolute bisection tolerance for the continuous minimizer `x_star`.
const X_STAR_TOL: f64 = 1e-12;

/// Errors for rate-function evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    /// `delta` outside the domain of the requested quantity.
    #[error("delta must be {expected}, got {delta}")]
    BadDelta {
        /// Offending value.
        delta: f64,
        /// Human-readable domain, e.g. "positive".
        expected: &'static str,
    },
    /// Clique size below 2.
    #[error("clique size k must be at least 2, got {k}")]
    BadCliqueSize {
        /// Offending value.
        k: u32,
    },
    /// Ladder cap below 1.
    #[error("k_max must be at least 1, got {k_max}")]
    BadKMax {
        /// Offending value.
        k_max: u32,
    },
}

/// Exponent of the clique-of-size-`k` mechanism at excess `delta`.
///
/// `phi(delta, k) = k (k - 3) / 2 + ((1 + delta) / 2) * k / (k - 1)`.
///
/// Requires `delta > 0` (finite) and `k >= 2`.
pub fn phi(delta: f64, k: u32) -> Result<f64, RateError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(RateError::BadDelta {
            delta,
            expected: "positive and finite",
        });
    }
    if k < 2 {
        return Err(RateError::BadCliqueSize { k });
    }
    let kf = f64::from(k);
    Ok(kf * (kf - 3.0) / 2.0 + 0.5 * (1.0 + delta) * kf / (kf - 1.0))
}

/// The rate function at one `delta`, with everything the minimization
/// produced along the way.
#[derive(Debug, Clone, Serialize)]
pub struct RateProfile {
    /// Excess parameter the profile was computed at.
    pub delta: f64,
    /// `min_k phi(delta, k)`.
    pub psi: f64,
    /// All minimizing clique sizes (one value, or two consecutive ones at a
    /// transition point), ascending.
    pub minimizers: Vec<u32>,
    /// Smallest minimizer.
    pub h: u32,
    /// Continuous minimizer of `phi(delta, .)` over real arguments.
    pub x_star: f64,
}

/// Transition ladder: `points[k-1] = delta_k`, the largest `delta` at which a
/// clique of size `k` is still optimal. `delta_1 = 0` by convention.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionLadder {
    /// `delta_1 < delta_2 < ...`, strictly increasing, `points[0] = 0`.
    pub points: Vec<f64>,
    /// Largest clique size covered: `points.len() == k_max`.
    pub k_max: u32,
}

/// Derivative of `phi(delta, .)` in its continuous argument:
/// `x - 3/2 - (1 + delta) / (2 (x - 1)^2)`.
fn phi_prime(delta: f64, x: f64) -> f64 {
    let d = x - 1.0;
    x - 1.5 - 0.5 * (1.0 + delta) / (d * d)
}

/// Continuous minimizer of `phi(delta, .)`, found by bisection on the
/// bracket `(c + 1, c + 3/2)` with `c = ((1 + delta) / 2)^{1/3}`, where the
/// derivative provably changes sign (`phi'(c + 1) = -1/2` exactly and
/// `phi'(c + 3/2) = c (c + 1/4) / (c + 1/2)^2 > 0`).
pub fn x_star(delta: f64) -> Result<f64, RateError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(RateError::BadDelta {
            delta,
            expected: "positive and finite",
        });
    }
    let c = (0.5 * (1.0 + delta)).cbrt();
    let mut lo = c + 1.0;
    let mut hi = c + 1.5;
    debug_assert!(phi_prime(delta, lo) < 0.0);
    debug_assert!(phi_prime(delta, hi) > 0.0);
    while hi - lo > X_STAR_TOL {
        let mid = 0.5 * (lo + hi);
        if phi_prime(delta, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimize `phi(delta, .)` over integer clique sizes.
///
/// The scan cap is `max(ceil(x_star) + 2, 8)`; convexity makes anything past
/// the continuous minimizer plus one irrelevant, and the floor of 8 keeps the
/// sweep honest for small `delta`. Ties within a relative `1e-12` are
/// reported together (there are at most two, consecutive, by strict
/// convexity).
pub fn psi(delta: f64) -> Result<RateProfile, RateError> {
    let xs = x_star(delta)?;
    let k_cap = (xs.ceil() as u32 + 2).max(8);
    let mut best = f64::INFINITY;
    let mut values = Vec::with_capacity(k_cap as usize - 1);
    for k in 2..=k_cap {
        let v = phi(delta, k)?;
        values.push((k, v));
        if v < best {
            best = v;
        }
    }
    let tol = TIE_REL_TOL * best.abs().max(1.0);
    let minimizers: Vec<u32> = values
        .iter()
        .filter(|(_, v)| *v - best <= tol)
        .map(|(k, _)| *k)
        .collect();
    debug_assert!(!minimizers.is_empty());
    Ok(RateProfile {
        delta,
        psi: best,
        h: minimizers[0],
        minimizers,
        x_star: xs,
    })
}

/// Smallest optimal clique size at excess `delta`.
pub fn h(delta: f64) -> Result<u32, RateError> {
    Ok(psi(delta)?.h)
}

/// Exact transition points `delta_k = 2 k (k - 1)^2 - 1` for `k = 1 ..= k_max`
/// (`delta_1 = 0` by convention). `delta_k` solves
/// `phi(delta, k) = phi(delta, k + 1)`, which is affine in `delta`.
pub fn transition_points(k_max: u32) -> Result<TransitionLadder, RateError> {
    if k_max < 1 {
        return Err(RateError::BadKMax { k_max });
    }
    let points = (1..=k_max)
        .map(|k| {
            if k == 1 {
                0.0
            } else {
                let kf = f64::from(k);
                2.0 * kf * (kf - 1.0) * (kf - 1.0) - 1.0
            }
        })
        .collect();
    Ok(TransitionLadder { points, k_max })
}

/// Two-term large-`delta` expansion of the rate function:
/// `delta / 2 + (3 / 2^{5/3}) delta^{2/3}`. The error is `O(delta^{1/3})`.
pub fn psi_asymptotic(delta: f64) -> Result<f64, RateError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(RateError::BadDelta {
            delta,
            expected: "positive and finite",
        });
    }
    let c = 3.0 / 2f64.powf(5.0 / 3.0);
    Ok(0.5 * delta + c * delta.powf(2.0 / 3.0))
}

/// Empirical constant of the `O(delta^{1/3})` remainder of
/// [`psi_asymptotic`]: the supremum of
/// `|psi(delta) - psi_asymptotic(delta)| / delta^{1/3}` over a logarithmic
/// grid `delta in [1e2, 1e6]`. A diagnostic, not a theorem; useful as a
/// sanity band when extrapolating the expansion.
pub fn psi_asymptotic_residual_constant() -> f64 {
    let mut sup: f64 = 0.0;
    let steps = 200;
    for i in 0..=steps {
        let delta = 1e2 * 10f64.powf(4.0 * i as f64 / steps as f64);
        let exact = psi(delta).expect("grid delta is positive").psi;
        let asym = psi_asymptotic(delta).expect("grid delta is positive");
        sup = sup.max((exact - asym).abs() / delta.cbrt());
    }
    sup
}

/// Double-logarithmic decay exponent of the lower tail
/// `P(lambda_1 <= sqrt(2 (1 - delta) log n))`; equals `delta` on `(0, 1)`.
pub fn lower_tail_exponent(delta: f64) -> Result<f64, RateError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(RateError::BadDelta {
            delta,
            expected: "in the open interval (0, 1)",
        });
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_matches_hand_values() {
        assert_eq!(phi(0.5, 2).unwrap(), 0.5);
        assert_eq!(phi(3.0, 3).unwrap(), 3.0);
        assert_eq!(phi(23.0, 4).unwrap(), 18.0);
    }

    #[test]
    fn phi_rejects_bad_domain() {
        assert!(matches!(phi(0.0, 2), Err(RateError::BadDelta { .. })));
        assert!(matches!(phi(-1.0, 3), Err(RateError::BadDelta { .. })));
        assert!(matches!(
            phi(f64::INFINITY, 3),
            Err(RateError::BadDelta { .. })
        ));
        assert!(matches!(phi(1.0, 1), Err(RateError::BadCliqueSize { k: 1 })));
        assert!(matches!(phi(1.0, 0), Err(RateError::BadCliqueSize { k: 0 })));
    }

    #[test]
    fn psi_exact_small_points() {
        let p = psi(1.0).unwrap();
        assert_eq!(p.psi, 1.0);
        assert_eq!(p.minimizers, vec![2]);
        assert_eq!(p.h, 2);

        let p = psi(3.0).unwrap();
        assert!((p.psi - 3.0).abs() < 1e-12);
        assert_eq!(p.minimizers, vec![2, 3]);
        assert_eq!(p.h, 2);

        let p = psi(23.0).unwrap();
        assert!((p.psi - 18.0).abs() < 1e-12);
        assert_eq!(p.minimizers, vec![3, 4]);
        assert_eq!(p.h, 3);
    }

    #[test]
    fn minimizer_sets_between_transitions() {
        assert_eq!(psi(10.0).unwrap().minimizers, vec![3]);
        assert_eq!(psi(40.0).unwrap().minimizers, vec![4]);
        assert_eq!(psi(0.37).unwrap().minimizers, vec![2]);
    }

    #[test]
    fn x_star_stays_in_bracket() {
        for &delta in &[0.1, 1.0, 3.0, 10.0, 100.0, 10_000.0f64] {
            let c = (0.5 * (1.0 + delta)).cbrt();
            let xs = x_star(delta).unwrap();
            assert!(xs > c + 1.0 && xs < c + 1.5, "delta={delta} xs={xs}");
        }
        // Worked value: the continuous minimizer at delta = 3.
        let xs = x_star(3.0).unwrap();
        assert!((2.26..2.76).contains(&xs));
        assert!((xs - 2.4507).abs() < 1e-3);
    }

    #[test]
    fn minimizers_hug_x_star() {
        for &delta in &[0.2, 1.0, 2.9, 3.1, 8.0, 22.9, 23.1, 50.0, 400.0] {
            let p = psi(delta).unwrap();
            let lo = p.x_star.floor() as u32;
            let hi = p.x_star.ceil() as u32;
            assert!(
                p.minimizers.iter().any(|&k| k == lo || k == hi),
                "delta={delta}: minimizers {:?} vs x_star {}",
                p.minimizers,
                p.x_star
            );
        }
    }

    #[test]
    fn ladder_closed_form() {
        let ladder = transition_points(4).unwrap();
        assert_eq!(ladder.points, vec![0.0, 3.0, 23.0, 71.0]);
        assert_eq!(ladder.k_max, 4);
        assert!(matches!(transition_points(0), Err(RateError::BadKMax { .. })));
    }

    #[test]
    fn ladder_strictly_increasing() {
        let ladder = transition_points(12).unwrap();
        for w in ladder.points.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn asymptotic_expansion_value() {
        let v = psi_asymptotic(1000.0).unwrap();
        assert!((v - 594.49).abs() < 0.01, "got {v}");
    }

    #[test]
    fn asymptotic_residual_constant_is_bounded() {
        // The remainder's empirical constant settles near 1/2^{4/3} ~ 0.397;
        // assert a safe band so regressions in either term get caught.
        let c = psi_asymptotic_residual_constant();
        assert!(c > 0.05 && c < 0.8, "residual constant {c}");
    }

    #[test]
    fn lower_tail_exponent_is_identity_on_unit_interval() {
        assert_eq!(lower_tail_exponent(0.25).unwrap(), 0.25);
        assert!(lower_tail_exponent(0.0).is_err());
        assert!(lower_tail_exponent(1.0).is_err());
        assert!(lower_tail_exponent(-0.5).is_err());
    }

    #[test]
    fn h_is_smallest_minimizer() {
        assert_eq!(h(23.0).unwrap(), 3);
        assert_eq!(h(23.000001).unwrap(), 4);
        assert_eq!(h(0.5).unwrap(), 2);
    }
}
