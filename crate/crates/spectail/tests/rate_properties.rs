//! Structural properties of the rate function that the closed forms must
//! satisfy: convexity, piecewise affinity between transitions, continuity at
//! transitions, and agreement of the transition ladder with an independent
//! root-find.

use proptest::prelude::*;
use spectail::rate::{h, lower_tail_exponent, phi, psi, transition_points, x_star};

/// Independent route to the tie point of sizes `k` and `k + 1`:
/// `phi(delta, k) - phi(delta, k + 1)` is affine in `delta`, so the root
/// follows from evaluating at two points, with no reference to the ladder
/// formula.
fn tie_point_by_root_find(k: u32) -> f64 {
    let g = |delta: f64| phi(delta, k).unwrap() - phi(delta, k + 1).unwrap();
    let (a, b) = (1.0, 2.0);
    let (ga, gb) = (g(a), g(b));
    a - ga * (b - a) / (gb - ga)
}

#[test]
fn ladder_matches_independent_root_find() {
    let ladder = transition_points(9).unwrap();
    for k in 2..=8u32 {
        let closed = ladder.points[k as usize - 1];
        let root = tie_point_by_root_find(k);
        assert!(
            (closed - root).abs() <= 1e-9 * closed.abs().max(1.0),
            "k={k}: closed {closed} vs root-find {root}"
        );
    }
}

#[test]
fn psi_is_affine_between_transitions() {
    // On each interval of the ladder the minimizer is a single fixed k, so
    // psi inherits the affine delta-dependence of phi(., k). Fit a line
    // through the endpoints of each interval (shrunk to dodge the ties) and
    // demand a tiny residual at 100 interior samples.
    let ladder = transition_points(7).unwrap();
    for w in ladder.points.windows(2) {
        let margin = 1e-6 * (w[1] - w[0]);
        let (a, b) = (w[0] + margin, w[1] - margin);
        let (pa, pb) = (psi(a).unwrap().psi, psi(b).unwrap().psi);
        let slope = (pb - pa) / (b - a);
        for i in 0..=100 {
            let d = a + (b - a) * f64::from(i) / 100.0;
            let predicted = pa + slope * (d - a);
            let actual = psi(d).unwrap().psi;
            assert!(
                (predicted - actual).abs() < 1e-10 * actual.abs().max(1.0),
                "interval [{a}, {b}] at delta={d}: line {predicted} vs psi {actual}"
            );
        }
    }
}

#[test]
fn psi_is_continuous_at_transitions() {
    let ladder = transition_points(8).unwrap();
    for &dk in &ladder.points[1..] {
        let below = psi(dk - 1e-9).unwrap().psi;
        let at = psi(dk).unwrap().psi;
        let above = psi(dk + 1e-9).unwrap().psi;
        assert!((at - below).abs() < 1e-6, "jump below delta_k={dk}");
        assert!((above - at).abs() < 1e-6, "jump above delta_k={dk}");
    }
}

#[test]
fn minimizer_pairs_only_at_transitions() {
    let ladder = transition_points(6).unwrap();
    for &dk in &ladder.points[1..] {
        assert_eq!(psi(dk).unwrap().minimizers.len(), 2, "tie at delta_k={dk}");
        assert_eq!(psi(dk - 0.5).unwrap().minimizers.len(), 1);
        assert_eq!(psi(dk + 0.5).unwrap().minimizers.len(), 1);
    }
}

proptest! {
    #[test]
    fn phi_discretely_convex(delta in 1e-3..1e5f64, k in 3..40u32) {
        let a = phi(delta, k - 1).unwrap();
        let b = phi(delta, k).unwrap();
        let c = phi(delta, k + 1).unwrap();
        let slack = 1e-9 * b.abs().max(1.0);
        prop_assert!(a + c - 2.0 * b >= -slack);
    }

    #[test]
    fn psi_is_the_minimum_over_a_wide_sweep(delta in 1e-3..1e4f64) {
        let p = psi(delta).unwrap();
        for k in 2..=60u32 {
            let v = phi(delta, k).unwrap();
            prop_assert!(p.psi <= v + 1e-9 * v.abs().max(1.0));
        }
        // And it is attained at every reported minimizer.
        for &k in &p.minimizers {
            let v = phi(delta, k).unwrap();
            prop_assert!((v - p.psi).abs() <= 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn h_is_nondecreasing(d1 in 1e-3..1e5f64, d2 in 1e-3..1e5f64) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(h(lo).unwrap() <= h(hi).unwrap());
    }

    #[test]
    fn x_star_bracket_and_stationarity(delta in 1e-3..1e6f64) {
        let c = (0.5 * (1.0 + delta)).cbrt();
        let xs = x_star(delta).unwrap();
        prop_assert!(xs > c + 1.0 && xs < c + 1.5);
        // Stationarity: the derivative straddles zero within the tolerance.
        let d = xs - 1.0;
        let deriv = xs - 1.5 - 0.5 * (1.0 + delta) / (d * d);
        prop_assert!(deriv.abs() < 1e-6 * (1.0 + delta));
    }

    #[test]
    fn psi_increases_with_delta(d1 in 1e-3..1e5f64, d2 in 1e-3..1e5f64) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(psi(lo).unwrap().psi <= psi(hi).unwrap().psi + 1e-12);
    }

    #[test]
    fn lower_tail_exponent_identity(delta in 0.0..1.0f64) {
        prop_assume!(delta > 0.0);
        prop_assert_eq!(lower_tail_exponent(delta).unwrap(), delta);
    }
}
