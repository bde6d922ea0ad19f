//! Tail probabilities of the largest eigenvalue: analytic bounds, Monte
//! Carlo estimators, and exponent fits against the vertex count.
//!
//! The upper-tail event is `lambda_1(Z) >= sqrt(2 (1+delta) log n)`, the
//! lower-tail event is `lambda_1(Z) <= sqrt(2 (1-delta) log n)`. Both decay
//! polynomially in `n`, so every estimator here reports either a
//! Clopper-Pearson interval around a hit frequency or a certified one-sided
//! bound, and [`fit_exponent`] turns a grid of such estimates into a fitted
//! power of `n`.
//!
//! Monte Carlo trials never eigensolve more than they must. Each sampled
//! network is split into connected components, and a component is tested
//! against the level in three stages: any single weight of magnitude at
//! least the level certifies exceedance (eigenvalue interlacing on the
//! 2x2 principal block), a Frobenius norm below the level refutes it
//! (`lambda_1^2 <= sum of eigenvalue squares`), and only the remaining
//! components are eigensolved exactly.
//!
//! Determinism: trials are partitioned into fixed blocks of [`BLOCK`]
//! trials; block `b` draws from an independent child stream `b` of a master
//! seed taken once from the caller's generator. Results are merged in block
//! order, so estimates are byte-identical for every worker-thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::graph::{clique_number, largest_eigenvalue, GraphError, UnionFind, WeightedGraph};
use crate::sampler::{child_rng, sample_network, ModelParams, SamplerError};

/// Trials per parallel block; fixed so that estimates never depend on the
/// number of worker threads.
pub const BLOCK: u64 = 256;

/// Relative tolerance for exact eigenvalue decisions inside trials. Hit
/// decisions compare `lambda_1` against a continuous level, so the only
/// samples this tolerance could misclassify are the measure-zero ones within
/// `~1e-8 * lambda_1` of the level.
const EIG_TOL: f64 = 1e-8;

/// Domain violations for tail bounds, estimators, and fits.
#[derive(Debug, Error)]
pub enum TailError {
    #[error("tail point must be a positive finite real, got {t}")]
    BadTailPoint { t: f64 },
    #[error("delta must be a finite real in the admissible range, got {delta}")]
    BadDelta { delta: f64 },
    #[error("density constant c must be a positive finite real, got {c}")]
    BadConstant { c: f64 },
    #[error("need at least c*n = {need} samples of the maximum, got m = {m}")]
    SampleCountTooSmall { m: u64, need: f64 },
    #[error("tail level {level} is below 1, outside the bound's validity range")]
    InadmissibleLevel { level: f64 },
    #[error("log log n must be positive: need n >= 16, got n = {n}")]
    SmallN { n: usize },
    #[error("chi-square degrees of freedom must be at least 1, got {m}")]
    BadDegreesOfFreedom { m: usize },
    #[error("chi-square tail point must exceed the degrees of freedom, got L = {l} with m = {m}")]
    TailBelowDof { l: f64, m: usize },
    #[error("epsilon must lie in (0, 1], got {epsilon}")]
    BadEpsilon { epsilon: f64 },
    #[error("gamma must be a positive finite real, got {gamma}")]
    BadGamma { gamma: f64 },
    #[error("eta must lie in (0, 1/2), got {eta}")]
    BadEta { eta: f64 },
    #[error("alpha must be a positive finite real, got {alpha}")]
    BadAlphaExponent { alpha: f64 },
    #[error("cap {name} must be a nonnegative finite real, got {value}")]
    BadCap { name: &'static str, value: f64 },
    #[error("theta = {theta} falls outside (0, 1); shrink eta or c3")]
    ThetaOutOfRange { theta: f64 },
    #[error("clique size must satisfy 2 <= k <= n, got k = {k} with n = {n}")]
    BadCliqueSize { k: usize, n: usize },
    #[error("excess l must satisfy 0 <= l <= C(k,2) - k = {max}, got l = {l} with k = {k}")]
    ExcessOutOfRange { k: usize, l: usize, max: i64 },
    #[error("at least one trial is required")]
    ZeroTrials,
    #[error("hits must not exceed trials, got {hits} > {trials}")]
    HitsExceedTrials { hits: u64, trials: u64 },
    #[error("confidence parameter must lie in (0, 1), got {alpha}")]
    BadConfidence { alpha: f64 },
    #[error("exponent fits need at least 3 grid points, got {got}")]
    NotEnoughPoints { got: usize },
    #[error("n grid must be strictly increasing, violated at index {index}")]
    GridNotIncreasing { index: usize },
    #[error("probability at index {index} must lie in (0, 1], got {value}")]
    BadProbability { index: usize, value: f64 },
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// How a [`TailEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMethod {
    /// Direct Monte Carlo frequency of the tail event.
    Naive,
    /// Certified product lower bound: a Monte Carlo structure frequency
    /// times an analytic Gaussian-tail factor.
    PlantedLowerBound,
    /// Averaged per-sample union bound over components, each bounded through
    /// its clique number and a chi-square tail.
    UnionUpperBound,
}

/// One tail-probability estimate with its 95% confidence interval.
///
/// For [`TailMethod::Naive`] the interval is Clopper-Pearson around
/// `hits/trials`. For the planted lower bound the interval covers the
/// product lower bound itself, not the tail probability, and `hits` counts
/// the Monte Carlo factor's successes. For the union upper bound the
/// interval is a normal-approximation band around the averaged per-sample
/// bound and `hits` counts the samples whose bound saturated at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    /// Point estimate in `[0, 1]`.
    pub probability: f64,
    /// Lower 95% confidence bound.
    pub ci_low: f64,
    /// Upper 95% confidence bound.
    pub ci_high: f64,
    /// Monte Carlo trials performed.
    pub trials: u64,
    /// Trials on which the method's counting event occurred.
    pub hits: u64,
    /// Estimator that produced this record.
    pub method: TailMethod,
}

impl TailEstimate {
    /// Clopper-Pearson estimate from a raw hit count.
    fn from_counts(hits: u64, trials: u64, method: TailMethod) -> Result<Self, TailError> {
        let (ci_low, ci_high) = clopper_pearson(hits, trials, 0.05)?;
        Ok(TailEstimate {
            probability: hits as f64 / trials as f64,
            ci_low,
            ci_high,
            trials,
            hits,
            method,
        })
    }
}

/// Least-squares fit of `log P` against `log n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Vertex counts, strictly increasing, length at least 3.
    pub n_grid: Vec<usize>,
    /// Natural logs of the fitted probabilities.
    pub log_probs: Vec<f64>,
    /// Fitted exponent of `n` (slope of `log P` on `log n`).
    pub slope: f64,
    /// 95% confidence interval for the slope from the residual standard
    /// error; degenerate when the points are exactly collinear.
    pub slope_ci: (f64, f64),
}

/// Constants of the conditioned-component tail bound.
///
/// The bound applies to a connected graph on `<= c2 log n / log log n`
/// vertices with maximum degree `<= c1 log n / log log n` and at most
/// `|V| + c3` edges, whose weights are standard Gaussians conditioned to
/// exceed `sqrt(eps log log n)` in magnitude; `k` is its clique number.
/// `alpha` sets the level `sqrt(2 alpha log n)`, `gamma` absorbs
/// subpolynomial factors, and `eta` is the free split parameter that
/// determines `theta = (2 eta^2 + 2 eta^4 c3)^(1/4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentBoundParams {
    /// Degree cap coefficient.
    pub c1: f64,
    /// Size cap coefficient.
    pub c2: f64,
    /// Tree excess cap.
    pub c3: f64,
    /// Level exponent: the event is `lambda >= sqrt(2 alpha log n)`.
    pub alpha: f64,
    /// Slack exponent absorbing subpolynomial factors.
    pub gamma: f64,
    /// Split parameter in `(0, 1/2)`.
    pub eta: f64,
    /// Conditioning strength of the weights, in `(0, 1)`.
    pub epsilon: f64,
    /// Clique number of the component, at least 2.
    pub k: usize,
    /// Derived split weight `(2 eta^2 + 2 eta^4 c3)^(1/4)`, in `(0, 1)`.
    pub theta: f64,
}

impl ComponentBoundParams {
    /// Validates the constants and derives `theta`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c1: f64,
        c2: f64,
        c3: f64,
        alpha: f64,
        gamma: f64,
        eta: f64,
        epsilon: f64,
        k: usize,
    ) -> Result<Self, TailError> {
        for (name, value) in [("c1", c1), ("c2", c2), ("c3", c3)] {
            if !value.is_finite() || value < 0.0 {
                return Err(TailError::BadCap { name, value });
            }
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(TailError::BadAlphaExponent { alpha });
        }
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(TailError::BadGamma { gamma });
        }
        if !eta.is_finite() || eta <= 0.0 || eta >= 0.5 {
            return Err(TailError::BadEta { eta });
        }
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 1.0 {
            return Err(TailError::BadEpsilon { epsilon });
        }
        if k < 2 {
            return Err(TailError::BadCliqueSize { k, n: usize::MAX });
        }
        let theta = (2.0 * eta * eta + 2.0 * eta.powi(4) * c3).powf(0.25);
        if !(0.0 < theta && theta < 1.0) {
            return Err(TailError::ThetaOutOfRange { theta });
        }
        Ok(ComponentBoundParams {
            c1,
            c2,
            c3,
            alpha,
            gamma,
            eta,
            epsilon,
            k,
            theta,
        })
    }
}

/// Upper-tail level `sqrt(2 (1+delta) log n)`.
pub fn upper_tail_level(n: usize, delta: f64) -> f64 {
    (2.0 * (1.0 + delta) * (n as f64).ln()).sqrt()
}

/// Lower-tail level `sqrt(2 (1-delta) log n)`.
pub fn lower_tail_level(n: usize, delta: f64) -> f64 {
    (2.0 * (1.0 - delta) * (n as f64).ln()).sqrt()
}

/// Standard Gaussian density at `t`.
fn gaussian_density(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// The Gaussian tail sandwich: returns `(lower, upper)` with
///
/// ```text
/// phi(t) t / (t^2 + 1)  <=  P(N(0,1) >= t)  <=  phi(t) / t
/// ```
///
/// where `phi` is the standard normal density. The ratio of the two bounds
/// is exactly `t^2 / (t^2 + 1)`, so they pinch together quadratically as
/// `t` grows. Beyond `t ~ 38.6` the density underflows `f64` and both
/// bounds degenerate to zero; [`gaussian_tail_log_bounds`] covers that
/// range exactly.
pub fn gaussian_tail_bounds(t: f64) -> Result<(f64, f64), TailError> {
    if !t.is_finite() || t <= 0.0 {
        return Err(TailError::BadTailPoint { t });
    }
    let phi = gaussian_density(t);
    Ok((phi * t / (t * t + 1.0), phi / t))
}

/// Natural logs of the two [`gaussian_tail_bounds`] arms, assembled in log
/// space so they stay exact far past the underflow point of the direct
/// formulas.
pub fn gaussian_tail_log_bounds(t: f64) -> Result<(f64, f64), TailError> {
    if !t.is_finite() || t <= 0.0 {
        return Err(TailError::BadTailPoint { t });
    }
    let log_phi = -0.5 * t * t - 0.5 * (2.0 * std::f64::consts::PI).ln();
    Ok((
        log_phi + (t / (t * t + 1.0)).ln(),
        log_phi - t.ln(),
    ))
}

/// Tail bounds for the maximum of `m >= c n` independent standard
/// Gaussians against the levels `sqrt(2 (1 +/- delta) log n)`.
///
/// Returns `(lower, upper)` where `lower` bounds the upper-tail event from
/// below and `upper` bounds the lower-tail event from above:
///
/// ```text
/// P(max >= sqrt(2 (1+delta) log n)) >= min(c' n^-delta / sqrt(log n), 1 - 1/e),
///     c' = c / (4 e sqrt(pi (1+delta)))
/// P(max <= sqrt(2 (1-delta) log n)) <= exp(-c'' n^delta / sqrt(log n)),
///     c'' = c / (4 sqrt(pi (1-delta)))
/// ```
///
/// Both constants come from the same chain: at a level
/// `L = sqrt(2 (1+s) log n) >= 1` the sandwich's lower arm gives
/// `Q(L) >= phi(L) L / (L^2+1) >= phi(L) / (2L) = n^-(1+s) / (4 sqrt(pi (1+s) log n))`.
/// For the upper tail, `1 - (1-Q)^m >= 1 - exp(-mQ)`, which is at least
/// `mQ/e` when `mQ <= 1` and at least `1 - 1/e` otherwise, so the returned
/// minimum is valid in both regimes. For the lower tail,
/// `(1-Q)^m <= exp(-mQ)` directly.
pub fn max_gaussian_bounds(
    m: u64,
    n: usize,
    delta: f64,
    c: f64,
) -> Result<(f64, f64), TailError> {
    if n < 3 {
        return Err(TailError::SmallN { n });
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(TailError::BadConstant { c });
    }
    if !delta.is_finite() || !(0.0..1.0).contains(&delta) {
        return Err(TailError::BadDelta { delta });
    }
    let need = c * n as f64;
    if (m as f64) < need {
        return Err(TailError::SampleCountTooSmall { m, need });
    }
    let log_n = (n as f64).ln();
    // Both levels must be >= 1 for the 1/(2L) step; the upper-tail level
    // sqrt(2 (1+delta) log n) always is at n >= 3.
    let low_level = lower_tail_level(n, delta);
    if low_level < 1.0 {
        return Err(TailError::InadmissibleLevel { level: low_level });
    }
    let pi = std::f64::consts::PI;
    let c_upper = c / (4.0 * std::f64::consts::E * (pi * (1.0 + delta)).sqrt());
    let c_lower = c / (4.0 * (pi * (1.0 - delta)).sqrt());
    let lower = (c_upper * (n as f64).powf(-delta) / log_n.sqrt()).min(1.0 - (-1.0f64).exp());
    let upper = (-c_lower * (n as f64).powf(delta) / log_n.sqrt()).exp();
    Ok((lower, upper))
}

/// Tail bound for a sum of `m` squared conditioned Gaussians: with
/// `Y_1, .., Y_m` independent standard Gaussians conditioned on
/// `|Y_i| > sqrt(eps log log n)`,
///
/// ```text
/// P(sum Y_i^2 >= L) <= min(1, 2^m e^{-L/2} e^{m/2} (L/m)^m e^{eps m log log n / 2})
/// ```
///
/// The constant 2 is admissible for every `L > m` by the following chain.
/// Conditioned on exceeding `t0`, the overshoot `U = Y^2 - t0^2` satisfies
/// `P(U >= u) <= e^{-u/2}` (the map `u -> Q(sqrt(t0^2+u)) e^{u/2}` is
/// nonincreasing because `Q(v) <= phi(v)/v`), so `U` is dominated by an
/// exponential of mean 2 and `E e^{s Y^2} <= e^{s t0^2} / (1-2s)` for
/// `s < 1/2`. Chernoff at the chi-square-optimal `s` gives constant
/// `sqrt(e)/2` whenever `L > m t0^2 + 2m`; on the remaining range
/// `m < L <= m t0^2 + 2m` the stated product with constant 2 is at least 1,
/// hence trivially valid.
pub fn chi_tail_bound(m: usize, l: f64, epsilon: f64, n: usize) -> Result<f64, TailError> {
    if m == 0 {
        return Err(TailError::BadDegreesOfFreedom { m });
    }
    if !l.is_finite() || l <= m as f64 {
        return Err(TailError::TailBelowDof { l, m });
    }
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon > 1.0 {
        return Err(TailError::BadEpsilon { epsilon });
    }
    if n < 16 {
        return Err(TailError::SmallN { n });
    }
    let mf = m as f64;
    let loglog = (n as f64).ln().ln();
    // Assemble in log space: m ln 2 - L/2 + m/2 + m ln(L/m) + eps m loglog / 2.
    let log_bound = mf * 2.0f64.ln() - 0.5 * l + 0.5 * mf + mf * (l / mf).ln()
        + 0.5 * epsilon * mf * loglog;
    Ok(log_bound.min(0.0).exp())
}

/// Simplified power form of the conditioned chi-square tail: when the
/// degrees of freedom obey `m <= b log n / log log n + O(1)` and the level
/// is `L = a log n`, the bound of [`chi_tail_bound`] collapses to
///
/// ```text
/// P <= n^{-a/2 + eps b / 2 + gamma}
/// ```
///
/// for every fixed `gamma > 0` and `n` large enough to absorb the
/// polylogarithmic factors. The returned value is clamped to `[0, 1]`.
pub fn chi_tail_power_bound(
    a: f64,
    b: f64,
    epsilon: f64,
    gamma: f64,
    n: usize,
) -> Result<f64, TailError> {
    if !a.is_finite() || a <= 0.0 {
        return Err(TailError::BadAlphaExponent { alpha: a });
    }
    if !b.is_finite() || b < 0.0 {
        return Err(TailError::BadCap {
            name: "b",
            value: b,
        });
    }
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon > 1.0 {
        return Err(TailError::BadEpsilon { epsilon });
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(TailError::BadGamma { gamma });
    }
    if n < 16 {
        return Err(TailError::SmallN { n });
    }
    let exponent = -0.5 * a + 0.5 * epsilon * b + gamma;
    Ok((n as f64).powf(exponent).min(1.0))
}

/// Two-term tail bound for the largest eigenvalue of one conditioned
/// component:
///
/// ```text
/// P(lambda >= sqrt(2 alpha log n))
///   <= n^{-alpha/(2 theta^2) + eps c2/2 + gamma}
///    + n^{-(k/(2(k-1))) (1-theta)^2 alpha + c1 eps/(2 eta^2) + gamma}
/// ```
///
/// clamped to `[0, 1]`. The first term controls the spread mass of the
/// quadratic form through the chi-square tail; the second controls the
/// aligned mass through the clique-number bound on the spectral norm.
pub fn component_tail_bound(p: &ComponentBoundParams, n: usize) -> Result<f64, TailError> {
    if n < 16 {
        return Err(TailError::SmallN { n });
    }
    let kf = p.k as f64;
    let exp1 = -p.alpha / (2.0 * p.theta * p.theta) + 0.5 * p.epsilon * p.c2 + p.gamma;
    let exp2 = -(kf / (2.0 * (kf - 1.0))) * (1.0 - p.theta).powi(2) * p.alpha
        + p.c1 * p.epsilon / (2.0 * p.eta * p.eta)
        + p.gamma;
    let nf = n as f64;
    Ok((nf.powf(exp1) + nf.powf(exp2)).min(1.0))
}

/// First-moment bound on the expected number of subgraphs with `k`
/// vertices and `k + l` edges inside the heavy-part support, whose edge
/// density is at most `d' / (n (log n)^{eps/2})` with `d' = d / sqrt(2 pi)`:
///
/// ```text
/// E N_{k,l} <= min((k/n)^l, (d' e^2 / (log n)^{eps/2})^{k+l})
/// ```
///
/// with constant 1, by the Stirling chain `C(n,k) <= (en/k)^k` and
/// `C(C(k,2), k+l) <= e^{k+l} k^{2(k+l)} / (k+l)^{k+l}`: their product over
/// the density power is `e^{-l} (k/(k+l))^{k+l} <= 1` times the displayed
/// product form `(k/n)^l D^{k+l}`. The product form is at most the density
/// arm always (since `k <= n`) and at most the `(k/n)^l` arm exactly when
/// `D <= 1`, so the min is certified for `D <= 1` and the density arm alone
/// is returned otherwise. The value bounds an expected count, not a
/// probability, and is deliberately not clamped at 1.
pub fn expected_subgraph_bound(
    n: usize,
    k: usize,
    l: usize,
    epsilon: f64,
    d: f64,
) -> Result<f64, TailError> {
    if n < 16 {
        return Err(TailError::SmallN { n });
    }
    if k < 1 || k > n {
        return Err(TailError::BadCliqueSize { k, n });
    }
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon > 1.0 {
        return Err(TailError::BadEpsilon { epsilon });
    }
    if !d.is_finite() || d < 0.0 {
        return Err(TailError::BadConstant { c: d });
    }
    let max_l = (k as i64) * (k as i64 - 1) / 2 - k as i64;
    if (l as i64) > max_l {
        return Err(TailError::ExcessOutOfRange { k, l, max: max_l });
    }
    let d_prime = d / (2.0 * std::f64::consts::PI).sqrt();
    let density_arm_base =
        d_prime * std::f64::consts::E.powi(2) / (n as f64).ln().powf(0.5 * epsilon);
    let density_arm = density_arm_base.powi((k + l) as i32);
    if density_arm_base <= 1.0 {
        let size_arm = (k as f64 / n as f64).powi(l as i32);
        Ok(size_arm.min(density_arm))
    } else {
        Ok(density_arm)
    }
}

/// Analytic exponent of the planted `k`-clique route to the upper tail:
/// a clique-as-component costs `n^{-(C(k,2)-k)}` and conditioning its
/// `C(k,2)` weights to reach `level/(k-1)` each costs
/// `n^{-C(k,2) (1+delta)/(k-1)^2}`, so the route's probability scales as
/// `n` to the power
///
/// ```text
/// -[ (C(k,2) - k) + C(k,2) (1+delta) / (k-1)^2 ]
/// ```
///
/// This function returns the bracketed decay exponent (positive for decay).
/// At `k = 2` it degenerates to `delta`, the single-heavy-edge route.
pub fn planted_exponent(delta: f64, k: usize) -> Result<f64, TailError> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(TailError::BadDelta { delta });
    }
    if k < 2 {
        return Err(TailError::BadCliqueSize { k, n: usize::MAX });
    }
    let kf = k as f64;
    let binom = kf * (kf - 1.0) / 2.0;
    Ok((binom - kf) + binom * (1.0 + delta) / ((kf - 1.0) * (kf - 1.0)))
}

/// All minimizers of [`planted_exponent`] over `k in {2, .., k_max}`, with
/// ties resolved at relative tolerance `1e-12`. The scan range must reach
/// past the argmin; the exponent grows quadratically in `k`, so any
/// `k_max` a few steps beyond the continuous minimizer is safe.
pub fn planted_exponent_minimizers(delta: f64, k_max: usize) -> Result<Vec<usize>, TailError> {
    if k_max < 2 {
        return Err(TailError::BadCliqueSize {
            k: k_max,
            n: usize::MAX,
        });
    }
    let mut best = f64::INFINITY;
    let mut values = Vec::with_capacity(k_max - 1);
    for k in 2..=k_max {
        let v = planted_exponent(delta, k)?;
        values.push(v);
        if v < best {
            best = v;
        }
    }
    let tol = 1e-12 * best.abs().max(1.0);
    Ok((2..=k_max)
        .zip(values)
        .filter(|&(_, v)| v <= best + tol)
        .map(|(k, _)| k)
        .collect())
}

/// Exact Clopper-Pearson interval for a binomial proportion at confidence
/// `1 - alpha`. The zero-hit interval is `[0, 1 - (alpha/2)^{1/trials}]`
/// and the all-hit interval mirrors it.
pub fn clopper_pearson(hits: u64, trials: u64, alpha: f64) -> Result<(f64, f64), TailError> {
    if trials == 0 {
        return Err(TailError::ZeroTrials);
    }
    if hits > trials {
        return Err(TailError::HitsExceedTrials { hits, trials });
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(TailError::BadConfidence { alpha });
    }
    let (h, t) = (hits as f64, trials as f64);
    let low = if hits == 0 {
        0.0
    } else {
        Beta::new(h, t - h + 1.0)
            .expect("shape parameters are positive")
            .inverse_cdf(0.5 * alpha)
    };
    let high = if hits == trials {
        1.0
    } else {
        Beta::new(h + 1.0, t - h)
            .expect("shape parameters are positive")
            .inverse_cdf(1.0 - 0.5 * alpha)
    };
    Ok((low, high))
}

/// Splits a graph's edges into connected components. Each returned list
/// keeps the global (sorted) edge order, so it is itself sorted.
fn component_edge_lists(g: &WeightedGraph) -> Vec<Vec<(usize, usize, f64)>> {
    let mut uf = UnionFind::new(g.n());
    for &(u, v, _) in g.edges() {
        uf.unite(u, v);
    }
    let mut slot = vec![usize::MAX; g.n()];
    let mut lists: Vec<Vec<(usize, usize, f64)>> = Vec::new();
    for &(u, v, w) in g.edges() {
        let r = uf.find(u);
        if slot[r] == usize::MAX {
            slot[r] = lists.len();
            lists.push(Vec::new());
        }
        lists[slot[r]].push((u, v, w));
    }
    lists
}

/// Rebuilds one component's edge list as a standalone graph on local
/// indices `0..size`.
fn reindex(edges: &[(usize, usize, f64)]) -> WeightedGraph {
    let mut ids: Vec<usize> = edges.iter().flat_map(|&(u, v, _)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let local = |x: usize| ids.binary_search(&x).expect("endpoint is in the id table");
    let remapped: Vec<(usize, usize, f64)> = edges
        .iter()
        .map(|&(u, v, w)| (local(u), local(v), w))
        .collect();
    WeightedGraph::new(ids.len(), remapped)
        .expect("component edges are sorted, in range, and finite")
}

/// Decides `lambda_1(component) >= level` without eigensolving when a
/// cheap certificate settles it: a single weight of magnitude `>= level`
/// certifies exceedance by interlacing, and a Frobenius norm below the
/// level refutes it.
fn component_exceeds(edges: &[(usize, usize, f64)], level: f64) -> Result<bool, TailError> {
    let mut frob_sq = 0.0;
    let mut max_abs: f64 = 0.0;
    for &(_, _, w) in edges {
        frob_sq += 2.0 * w * w;
        max_abs = max_abs.max(w.abs());
    }
    if max_abs >= level {
        return Ok(true);
    }
    if frob_sq < level * level {
        return Ok(false);
    }
    let (lambda, _) = largest_eigenvalue(&reindex(edges), EIG_TOL)?;
    Ok(lambda >= level)
}

/// Runs `trials` Bernoulli trials in fixed blocks of [`BLOCK`], each block
/// on child stream `block_index` of `master`, and sums the hits. The block
/// layout makes the count independent of the worker-thread schedule.
fn run_blocks<F>(trials: u64, master: u64, per_trial: F) -> Result<u64, TailError>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<bool, TailError> + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let counts: Result<Vec<u64>, TailError> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = child_rng(master, b);
            let in_block = BLOCK.min(trials - b * BLOCK);
            let mut hits = 0u64;
            for _ in 0..in_block {
                if per_trial(&mut rng)? {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    Ok(counts?.into_iter().sum())
}

/// Monte Carlo frequency of the upper-tail event
/// `lambda_1(Z) >= sqrt(2 (1+delta) log n)` with an exact Clopper-Pearson
/// 95% interval.
///
/// Calls with the same generator state and increasing `delta` test the same
/// sampled networks against increasing levels, so the estimate is
/// nonincreasing in `delta` at a fixed seed schedule.
pub fn upper_tail_naive(
    params: &ModelParams,
    delta: f64,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<TailEstimate, TailError> {
    if trials == 0 {
        return Err(TailError::ZeroTrials);
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(TailError::BadDelta { delta });
    }
    let level = upper_tail_level(params.n, delta);
    let master = rng.next_u64();
    let hits = run_blocks(trials, master, |block_rng| {
        let g = sample_network(params, block_rng);
        for list in component_edge_lists(&g) {
            if component_exceeds(&list, level)? {
                return Ok(true);
            }
        }
        Ok(false)
    })?;
    TailEstimate::from_counts(hits, trials, TailMethod::Naive)
}

/// Monte Carlo frequency of the lower-tail event
/// `lambda_1(Z) <= sqrt(2 (1-delta) log n)`, exploiting that `lambda_1` is
/// the maximum over connected components: a trial hits exactly when no
/// component exceeds the level.
pub fn lower_tail_mc(
    params: &ModelParams,
    delta: f64,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<TailEstimate, TailError> {
    if trials == 0 {
        return Err(TailError::ZeroTrials);
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
        return Err(TailError::BadDelta { delta });
    }
    let level = lower_tail_level(params.n, delta);
    let master = rng.next_u64();
    let hits = run_blocks(trials, master, |block_rng| {
        let g = sample_network(params, block_rng);
        for list in component_edge_lists(&g) {
            if component_exceeds(&list, level)? {
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    TailEstimate::from_counts(hits, trials, TailMethod::Naive)
}

/// Certified product lower bound on the upper-tail probability.
///
/// For `k >= 3` the product is `P(some component is exactly a k-clique)`,
/// estimated by Monte Carlo, times the analytic factor
/// `Q_low(level/(k-1))^C(k,2)`: conditioned on the support containing a
/// fixed k-clique component, its `C(k,2)` independent weights all reach
/// `level/(k-1)` with at least that probability, and the uniform vector on
/// the clique then certifies `lambda_1 >= level`.
///
/// For `k = 2` the clique-as-component event is needlessly restrictive, so
/// the product degenerates to the max-weight route: the Monte Carlo factor
/// is `P(support has at least m0 = max(1, ceil(d n / 8)) edges)` and the
/// analytic factor is `1 - (1 - 2 Q_low(level))^m0`, since conditioned on
/// any `m >= m0` edges the maximum of `m` independent weight magnitudes
/// stochastically dominates the maximum over `m0` of them, and any single
/// weight of magnitude `level` certifies exceedance by interlacing.
///
/// The reported interval covers the product lower bound itself (the
/// Clopper-Pearson interval of the Monte Carlo factor scaled by the
/// analytic factor), not the tail probability.
pub fn upper_tail_planted_lower(
    params: &ModelParams,
    delta: f64,
    k: usize,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<TailEstimate, TailError> {
    if trials == 0 {
        return Err(TailError::ZeroTrials);
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(TailError::BadDelta { delta });
    }
    if k < 2 || k > params.n {
        return Err(TailError::BadCliqueSize { k, n: params.n });
    }
    let level = upper_tail_level(params.n, delta);
    let master = rng.next_u64();
    let (hits, analytic) = if k == 2 {
        let m0 = ((params.d * params.n as f64 / 8.0).ceil() as u64).max(1);
        let hits = run_blocks(trials, master, |block_rng| {
            let g = sample_network(params, block_rng);
            Ok(g.num_edges() as u64 >= m0)
        })?;
        let (q_low, _) = gaussian_tail_bounds(level)?;
        let analytic = 1.0 - (1.0 - 2.0 * q_low).powi(m0.min(i32::MAX as u64) as i32);
        (hits, analytic)
    } else {
        let clique_edges = k * (k - 1) / 2;
        let hits = run_blocks(trials, master, |block_rng| {
            let g = sample_network(params, block_rng);
            for list in component_edge_lists(&g) {
                if list.len() != clique_edges {
                    continue;
                }
                let mut ids: Vec<usize> =
                    list.iter().flat_map(|&(u, v, _)| [u, v]).collect();
                ids.sort_unstable();
                ids.dedup();
                if ids.len() == k {
                    return Ok(true);
                }
            }
            Ok(false)
        })?;
        let (q_low, _) = gaussian_tail_bounds(level / (k as f64 - 1.0))?;
        let analytic = q_low.powi(clique_edges as i32);
        (hits, analytic)
    };
    let (cp_low, cp_high) = clopper_pearson(hits, trials, 0.05)?;
    Ok(TailEstimate {
        probability: (hits as f64 / trials as f64) * analytic,
        ci_low: cp_low * analytic,
        ci_high: cp_high * analytic,
        trials,
        hits,
        method: TailMethod::PlantedLowerBound,
    })
}

/// Averaged first-moment upper bound on the upper-tail probability.
///
/// Conditioned on the support, the clique-number bound
/// `lambda_1(C)^2 <= ((k_C - 1)/k_C) ||A_C||_F^2` turns each component `C`
/// into a chi-square event: its squared Frobenius norm is twice a
/// chi-square with one degree of freedom per edge, so
///
/// ```text
/// P(lambda_1 >= level | X) <= min(1, sum_C P(chi2_{e_C} >= (k_C/(k_C-1)) level^2 / 2))
/// ```
///
/// The estimator averages this certified per-support bound over sampled
/// supports; the weights are never drawn. `hits` counts the samples whose
/// bound saturated at 1, and the interval is a normal-approximation band
/// around the mean (degenerate to `[0, 1]` for fewer than two trials).
pub fn upper_tail_union_upper(
    params: &ModelParams,
    delta: f64,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<TailEstimate, TailError> {
    if trials == 0 {
        return Err(TailError::ZeroTrials);
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(TailError::BadDelta { delta });
    }
    let level = upper_tail_level(params.n, delta);
    let master = rng.next_u64();
    let blocks = trials.div_ceil(BLOCK);
    let partials: Result<Vec<(f64, f64, u64)>, TailError> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut block_rng = child_rng(master, b);
            let in_block = BLOCK.min(trials - b * BLOCK);
            let (mut sum, mut sum_sq, mut saturated) = (0.0f64, 0.0f64, 0u64);
            for _ in 0..in_block {
                let g = sample_network(params, &mut block_rng);
                let mut union = 0.0;
                for list in component_edge_lists(&g) {
                    let sub = reindex(&list);
                    let (k_c, _) = clique_number(&sub);
                    let ratio = k_c as f64 / (k_c as f64 - 1.0);
                    let dof = list.len() as f64;
                    let threshold = 0.5 * ratio * level * level;
                    union += ChiSquared::new(dof)
                        .expect("degrees of freedom are positive")
                        .sf(threshold);
                    if union >= 1.0 {
                        break;
                    }
                }
                let v = union.min(1.0);
                sum += v;
                sum_sq += v * v;
                if v >= 1.0 {
                    saturated += 1;
                }
            }
            Ok((sum, sum_sq, saturated))
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut saturated = 0u64;
    for (s, s2, c) in partials? {
        sum += s;
        sum_sq += s2;
        saturated += c;
    }
    let t = trials as f64;
    let mean = sum / t;
    let (ci_low, ci_high) = if trials < 2 {
        (0.0, 1.0)
    } else {
        let var = ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0);
        let half = 1.96 * (var / t).sqrt();
        ((mean - half).max(0.0), (mean + half).min(1.0))
    };
    Ok(TailEstimate {
        probability: mean,
        ci_low,
        ci_high,
        trials,
        hits: saturated,
        method: TailMethod::UnionUpperBound,
    })
}

/// Monte Carlo scaling of `P(G(n, d/n) contains a k-clique)` over an `n`
/// grid, fitted as a power of `n`. The expected number of k-cliques scales
/// as `n^{-(C(k,2) - k)}`, and for `k >= 4` that exponent is negative, so
/// the fitted slope should sit near `-(C(k,2) - k)` within its confidence
/// interval; at `k = 3` the probability is order one and the slope near 0.
///
/// Grid points where no clique is ever observed make the fit impossible
/// and surface as the zero-probability rejection from [`fit_exponent`].
pub fn clique_existence_scaling(
    n_grid: &[usize],
    k: usize,
    d: f64,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<ExponentFit, TailError> {
    if trials == 0 {
        return Err(TailError::ZeroTrials);
    }
    if k < 3 {
        return Err(TailError::BadCliqueSize {
            k,
            n: *n_grid.first().unwrap_or(&0),
        });
    }
    let mut samples = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let params = ModelParams::new(n, d, 0)?;
        let master = rng.next_u64();
        let hits = run_blocks(trials, master, |block_rng| {
            let g = sample_network(&params, block_rng);
            Ok(clique_number(&g).0 >= k)
        })?;
        samples.push((n, hits as f64 / trials as f64));
    }
    fit_exponent(&samples)
}

/// Least-squares fit of `log P` against `log n`, with a standard-error 95%
/// confidence interval for the slope (Student t with `len - 2` degrees of
/// freedom). Zero probabilities are rejected rather than silently mapped
/// to `-inf`; widen the trial budget or switch to a bound method instead.
pub fn fit_exponent(samples: &[(usize, f64)]) -> Result<ExponentFit, TailError> {
    if samples.len() < 3 {
        return Err(TailError::NotEnoughPoints { got: samples.len() });
    }
    for (i, &(n, p)) in samples.iter().enumerate() {
        if i > 0 && samples[i - 1].0 >= n {
            return Err(TailError::GridNotIncreasing { index: i });
        }
        if !p.is_finite() || p <= 0.0 || p > 1.0 {
            return Err(TailError::BadProbability { index: i, value: p });
        }
    }
    let xs: Vec<f64> = samples.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, p)| p.ln()).collect();
    let m = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / m;
    let y_bar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_bar) * (y - y_bar))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = m - 2.0;
    let se = (rss / dof / sxx).sqrt();
    let half = if se > 0.0 {
        StudentsT::new(0.0, 1.0, dof)
            .expect("degrees of freedom are positive")
            .inverse_cdf(0.975)
            * se
    } else {
        0.0
    };
    Ok(ExponentFit {
        n_grid: samples.iter().map(|&(n, _)| n).collect(),
        log_probs: ys,
        slope,
        slope_ci: (slope - half, slope + half),
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::sampler::child_rng;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn gaussian_sandwich_always_orders(t in 0.01f64..37.0) {
            let (low, high) = gaussian_tail_bounds(t).unwrap();
            prop_assert!(0.0 < low && low < high);
        }

        #[test]
        fn gaussian_log_sandwich_always_orders(t in 0.01f64..500.0) {
            let (log_low, log_high) = gaussian_tail_log_bounds(t).unwrap();
            prop_assert!(log_low < log_high);
            // The upper arm phi(t)/t is only sub-1 past moderate t; the
            // lower arm always is (it sits below a probability).
            prop_assert!(log_low < 0.0);
        }

        #[test]
        fn chi_bound_is_a_probability(m in 1usize..40, excess in 0.01f64..60.0,
                                      eps in 0.01f64..1.0) {
            let l = m as f64 + excess;
            let b = chi_tail_bound(m, l, eps, 1000).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
        }

        #[test]
        fn clopper_pearson_brackets_the_point_estimate(hits in 0u64..200, extra in 0u64..200) {
            let trials = hits + extra + 1;
            let (low, high) = clopper_pearson(hits, trials, 0.05).unwrap();
            let p = hits as f64 / trials as f64;
            prop_assert!(low <= p + 1e-12 && p <= high + 1e-12);
            prop_assert!((0.0..=1.0).contains(&low) && (0.0..=1.0).contains(&high));
        }

        #[test]
        fn component_decisions_agree_with_direct_eigensolve(seed in 0u64..30) {
            let params = ModelParams::new(48, 2.5, seed).unwrap();
            let mut rng = child_rng(seed, 7);
            let g = sample_network(&params, &mut rng);
            let level = 2.0;
            let mut any = false;
            for list in component_edge_lists(&g) {
                if component_exceeds(&list, level).unwrap() {
                    any = true;
                }
            }
            let (lambda, _) = crate::graph::largest_eigenvalue(&g, 1e-10).unwrap();
            // Strict inequality on either side of the level must agree.
            if lambda > level * (1.0 + 1e-9) {
                prop_assert!(any);
            }
            if lambda < level * (1.0 - 1e-9) {
                prop_assert!(!any);
            }
        }
    }
}
