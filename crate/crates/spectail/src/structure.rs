//! Conditional structure of a sparse Gaussian network on the upper-tail
//! event `lambda_1(Z) >= sqrt(2 (1+delta) log n)`.
//!
//! The large-deviation theory predicts that a network conditioned on this
//! event localizes. With conditional probability tending to one it contains
//! a clique `K_X` whose size lies in the minimizer set `M(delta)` of the
//! upper-tail rate function, every clique with at least four vertices sits
//! inside `K_X`, the top eigenvector carries almost all of its mass on
//! `K_X` and is nearly uniform there, and the weight magnitudes on the flat
//! part of the clique concentrate around `L / h(delta)` where
//! `L = sqrt(2 (1+delta) log n)` and `h(delta)` is the smallest minimizing
//! clique size. This module draws conditioned ensembles and measures each
//! prediction at laboratory scale:
//!
//! * [`conditioned_samples`] produces an ensemble of networks that all
//!   satisfy the conditioning event, by exact rejection or by a planted
//!   proxy, flagged with the method that produced it;
//! * [`clique_statistics`] compares maximum-clique sizes against the rate
//!   minimizers and checks uniqueness and big-clique containment by exact
//!   enumeration;
//! * [`eigenvector_report`] measures eigenvector mass and flatness on the
//!   clique against the two localization events;
//! * [`gaussian_flatness_report`] extracts the near-flat vertex set `T` and
//!   the normalized deviation of the weights on `T` from the flat profile;
//! * [`flatness_about_mean`] and [`flatness_from_pairs`] evaluate the same
//!   spread functional through two algebraically independent routes, tied
//!   together by the identity
//!   `sum_{i in K} (v_i^2 - a)^2 = (1/|K|) sum_{i<j in K} (v_i^2 - v_j^2)^2`
//!   with `a` the mean of the squares over `K`.
//!
//! Throughout, eigenvector coordinates enter only through the normalized
//! squares `u_i = v_i^2 / sum_j v_j^2`, so every report is invariant under
//! rescaling of the vector and under the sign flips that conjugate the
//! weight matrix by a diagonal of signs. With `kappa` in `(0, 1)` and
//! `kappa_0 = 40 kappa`, the measured events on a clique `K` of size `k`
//! are:
//!
//! * localization: `sum_{i in K} u_i >= 1 - kappa`;
//! * flatness: `sum_{i in K} (u_i - 1/k)^2 <= kappa_0 / k`;
//! * near-flat set: `T = { i in K : |u_i - 1/k| < kappa_0^{1/4} / k }`.
//!
//! The factor 40 absorbs what transporting a mass deficit of `kappa`
//! through the quadratic form costs: the off-clique interaction contributes
//! at most `32 kappa` to the spread of the squares and the deficit itself
//! at most `2 kappa^2 <= 2 kappa`, and rounding up to `40 kappa` leaves
//! slack. The quarter-power threshold makes `T` large whenever the flatness
//! event holds: by Cauchy-Schwarz the total absolute deviation of the
//! squares is at most `sqrt(kappa_0)`, so fewer than `kappa_0^{1/4} k`
//! vertices can each deviate by `kappa_0^{1/4} / k`, giving
//! `|T| >= (1 - kappa_0^{1/4}) k`.

use crate::graph::{
    all_maximum_cliques, clique_number, frobenius_sq, largest_eigenvalue,
    maximal_cliques_min_size, GraphError, SpectralSummary, WeightedGraph,
};
use crate::rate::{self, RateError};
use crate::sampler::{plant_clique, sample_network, ModelParams, SamplerError};
use crate::tails::{upper_tail_level, upper_tail_naive, TailError};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Relative residual tolerance for the eigensolves behind the reports.
const EIG_TOL: f64 = 1e-10;

/// Trials spent estimating the event probability before rejection sampling.
const REJECTION_PILOT_TRIALS: u64 = 2000;

/// Smallest pilot estimate for which rejection sampling is allowed to start.
const REJECTION_FLOOR: f64 = 1e-5;

/// Attempt budget per requested sample, in units of `1 / pilot estimate`.
const REJECTION_BUDGET_FACTOR: f64 = 10.0;

/// Multiplier turning the localization slack `kappa` into the flatness
/// threshold `kappa_0 = 40 kappa`.
const KAPPA0_FACTOR: f64 = 40.0;

/// The conditioning regime boundary: the structure predictions are theorems
/// only past the first ladder point `delta_2 = 3`, where the optimal clique
/// size first leaves 2.
const REGIME_BOUNDARY: f64 = 3.0;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("kappa must lie strictly between 0 and 1, got {kappa}")]
    BadKappa { kappa: f64 },
    #[error("target_samples must be positive")]
    ZeroTargets,
    #[error("conditioning event too rare for rejection: pilot estimate {estimate:.3e} is below the floor {floor:.0e}")]
    EventTooRare { estimate: f64, floor: f64 },
    #[error("rejection budget exhausted: collected {collected} of {target} samples in {attempts} attempts")]
    BudgetExceeded {
        collected: usize,
        target: usize,
        attempts: u64,
    },
    #[error("ensemble holds no samples")]
    EmptySample,
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("eigenvector length {len} does not match vertex count {n}")]
    DimensionMismatch { len: usize, n: usize },
    #[error("eigenvector has zero or non-finite norm")]
    ZeroVector,
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Tail(#[from] TailError),
}

/// How a conditioned ensemble is produced.
///
/// Rejection draws from the true conditional law; the planted proxy draws
/// from the planted ensemble post-selected on the event, which is the
/// natural surrogate when the event is too rare to hit by rejection.
/// Statistics from the two methods must never be pooled, which is why every
/// ensemble carries its method and the analysis functions take whole
/// ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditioningMethod {
    Rejection,
    PlantedProxy,
}

impl fmt::Display for ConditioningMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditioningMethod::Rejection => write!(f, "rejection"),
            ConditioningMethod::PlantedProxy => write!(f, "planted-proxy"),
        }
    }
}

/// Validated request for a conditioned ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningSpec {
    /// Upper-tail parameter of the conditioning event
    /// `lambda_1 >= sqrt(2 (1+delta) log n)`.
    pub delta: f64,
    /// Sampling method; see [`ConditioningMethod`].
    pub method: ConditioningMethod,
    /// Localization slack for the eigenvector events, strictly in `(0, 1)`.
    pub kappa: f64,
    /// Number of conditioned samples requested.
    pub target_samples: usize,
}

impl ConditioningSpec {
    pub fn new(
        delta: f64,
        method: ConditioningMethod,
        kappa: f64,
        target_samples: usize,
    ) -> Result<Self, StructureError> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(RateError::BadDelta {
                delta,
                expected: "positive and finite",
            }
            .into());
        }
        if !kappa.is_finite() || kappa <= 0.0 || kappa >= 1.0 {
            return Err(StructureError::BadKappa { kappa });
        }
        if target_samples == 0 {
            return Err(StructureError::ZeroTargets);
        }
        Ok(Self {
            delta,
            method,
            kappa,
            target_samples,
        })
    }
}

/// An ensemble of networks that all satisfy the conditioning event, each
/// paired with its spectral summary.
///
/// Draws happen in a single sequential stream from the caller's generator,
/// so the ensemble is reproducible independently of how many threads later
/// analyze it.
#[derive(Debug, Clone)]
pub struct ConditionedEnsemble {
    /// Method that produced every sample in this ensemble.
    pub method: ConditioningMethod,
    /// The conditioning level `sqrt(2 (1+delta) log n)`.
    pub level: f64,
    /// Accepted samples divided by attempts.
    pub acceptance_rate: f64,
    /// Networks drawn, accepted or not.
    pub attempts: u64,
    /// The accepted networks with their spectral summaries.
    pub samples: Vec<(WeightedGraph, SpectralSummary)>,
}

fn summarize_with(g: &WeightedGraph, lambda1: f64, vector: Vec<f64>) -> SpectralSummary {
    let (k, witness) = clique_number(g);
    SpectralSummary {
        lambda1,
        frob_sq: frobenius_sq(g),
        clique_number: k,
        clique_vertices: witness,
        top_eigenvector: vector,
    }
}

fn rejection_with_cap(
    params: &ModelParams,
    level: f64,
    target: usize,
    cap: u64,
    rng: &mut impl Rng,
) -> Result<(Vec<(WeightedGraph, SpectralSummary)>, u64), StructureError> {
    let mut samples = Vec::with_capacity(target);
    let mut attempts = 0u64;
    while samples.len() < target && attempts < cap {
        attempts += 1;
        let g = sample_network(params, rng);
        let (lambda1, vector) = largest_eigenvalue(&g, EIG_TOL)?;
        if lambda1 >= level {
            let summary = summarize_with(&g, lambda1, vector);
            samples.push((g, summary));
        }
    }
    if samples.len() < target {
        return Err(StructureError::BudgetExceeded {
            collected: samples.len(),
            target,
            attempts,
        });
    }
    Ok((samples, attempts))
}

/// Draw an ensemble conditioned on `lambda_1 >= sqrt(2 (1+delta) log n)`.
///
/// Rejection first spends [`REJECTION_PILOT_TRIALS`] Monte Carlo trials on a
/// pilot estimate of the event probability. When the estimate is below
/// [`REJECTION_FLOOR`] the draw refuses to start, and otherwise it caps the
/// attempt budget at `10 target / estimate` draws and fails with a budget
/// error if the cap is reached early, so a pathological run terminates.
///
/// The planted proxy plants a clique of the optimal size `h(delta)` at the
/// planting level and post-selects on the event. Planted weight magnitudes
/// of at least `level / (h - 1)` on a complete `h`-subset certify the event
/// through the uniform test vector, so post-selection accepts every draw and
/// the acceptance rate is 1; the selection is still checked sample by
/// sample, never assumed.
pub fn conditioned_samples(
    params: &ModelParams,
    spec: &ConditioningSpec,
    rng: &mut impl Rng,
) -> Result<ConditionedEnsemble, StructureError> {
    let level = upper_tail_level(params.n, spec.delta);
    let (samples, attempts) = match spec.method {
        ConditioningMethod::Rejection => {
            let pilot = upper_tail_naive(params, spec.delta, REJECTION_PILOT_TRIALS, rng)?;
            if pilot.probability < REJECTION_FLOOR {
                return Err(StructureError::EventTooRare {
                    estimate: pilot.probability,
                    floor: REJECTION_FLOOR,
                });
            }
            let cap = (REJECTION_BUDGET_FACTOR * spec.target_samples as f64 / pilot.probability)
                .ceil() as u64;
            rejection_with_cap(params, level, spec.target_samples, cap, rng)?
        }
        ConditioningMethod::PlantedProxy => {
            let k = rate::h(spec.delta)? as usize;
            let mut samples = Vec::with_capacity(spec.target_samples);
            let mut attempts = 0u64;
            // The certificate makes rejections impossible, so the attempt
            // loop needs no cap: each pass accepts or is a counterexample.
            while samples.len() < spec.target_samples {
                attempts += 1;
                let (g, _) = plant_clique(params, k, spec.delta, rng)?;
                let (lambda1, vector) = largest_eigenvalue(&g, EIG_TOL)?;
                if lambda1 >= level {
                    let summary = summarize_with(&g, lambda1, vector);
                    samples.push((g, summary));
                }
            }
            (samples, attempts)
        }
    };
    Ok(ConditionedEnsemble {
        method: spec.method,
        level,
        acceptance_rate: samples.len() as f64 / attempts as f64,
        attempts,
        samples,
    })
}

fn weight_between(g: &WeightedGraph, i: usize, j: usize) -> f64 {
    g.neighbors(i)
        .iter()
        .find(|&&(u, _)| u == j)
        .map_or(0.0, |&(_, w)| w)
}

fn clique_weight(g: &WeightedGraph, clique: &[usize]) -> f64 {
    let mut total = 0.0;
    for (a, &i) in clique.iter().enumerate() {
        for &j in &clique[a + 1..] {
            total += weight_between(g, i, j).abs();
        }
    }
    total
}

/// The canonical maximum clique `K_X`: among all cliques of maximum size,
/// the one with the largest total absolute edge weight, ties broken by
/// lexicographically smallest vertex list. The weight tie-break matches the
/// conditional picture, where the clique carrying the tail is the heavy
/// one; the lexicographic fallback makes the choice deterministic.
pub fn canonical_max_clique(g: &WeightedGraph) -> Vec<usize> {
    let cliques = all_maximum_cliques(g);
    let mut best: Option<(f64, Vec<usize>)> = None;
    // The enumeration is in lexicographic order, so keeping the first clique
    // that strictly improves the weight realizes the tie-break.
    for clique in cliques {
        let w = clique_weight(g, &clique);
        match &best {
            Some((bw, _)) if w <= *bw => {}
            _ => best = Some((w, clique)),
        }
    }
    best.map(|(_, c)| c).unwrap_or_default()
}

/// Normalized squared coordinates `u_i = v_i^2 / sum_j v_j^2`.
fn normalized_squares(v: &[f64]) -> Result<Vec<f64>, StructureError> {
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    if !norm_sq.is_finite() || norm_sq <= 0.0 {
        return Err(StructureError::ZeroVector);
    }
    Ok(v.iter().map(|x| x * x / norm_sq).collect())
}

fn mass_and_flatness(u: &[f64], clique: &[usize]) -> (f64, f64) {
    let k = clique.len() as f64;
    let mut mass = 0.0;
    let mut flatness = 0.0;
    for &i in clique {
        mass += u[i];
        let dev = u[i] - 1.0 / k;
        flatness += dev * dev;
    }
    (mass, flatness)
}

fn near_flat_set(u: &[f64], clique: &[usize], kappa: f64) -> Vec<usize> {
    let k = clique.len() as f64;
    let threshold = (KAPPA0_FACTOR * kappa).powf(0.25) / k;
    clique
        .iter()
        .copied()
        .filter(|&i| (u[i] - 1.0 / k).abs() < threshold)
        .collect()
}

/// Normalized aggregate deviation of the weights on `t_set` from the flat
/// profile: `[(1/h^2) sum_{i != j in T} | |Z_ij| - L/h |] / (L/h)` over
/// ordered pairs, with absent edges contributing weight 0.
fn gaussian_deviation(g: &WeightedGraph, t_set: &[usize], h: f64, level: f64) -> f64 {
    if t_set.len() < 2 {
        return 0.0;
    }
    let target = level / h;
    let mut dev = 0.0;
    for (a, &i) in t_set.iter().enumerate() {
        for &j in &t_set[a + 1..] {
            dev += (weight_between(g, i, j).abs() - target).abs();
        }
    }
    // Each unordered pair appears twice among ordered pairs.
    2.0 * dev / (h * h) / target
}

fn check_vector(z: &WeightedGraph, summary: &SpectralSummary) -> Result<(), StructureError> {
    if z.n() == 0 {
        return Err(StructureError::EmptyGraph);
    }
    if summary.top_eigenvector.len() != z.n() {
        return Err(StructureError::DimensionMismatch {
            len: summary.top_eigenvector.len(),
            n: z.n(),
        });
    }
    Ok(())
}

fn check_kappa(kappa: f64) -> Result<(), StructureError> {
    if !kappa.is_finite() || kappa <= 0.0 || kappa >= 1.0 {
        return Err(StructureError::BadKappa { kappa });
    }
    Ok(())
}

/// Eigenvector localization measured on the canonical maximum clique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorReport {
    /// Fraction of the squared eigenvector mass on `K_X`.
    pub mass_on_clique: f64,
    /// `sum_{i in K_X} (u_i - 1/|K_X|)^2`.
    pub flatness: f64,
    /// Localization event: `mass_on_clique >= 1 - kappa`.
    pub localized: bool,
    /// Flatness event: `flatness <= 40 kappa / |K_X|`.
    pub flat: bool,
}

/// Measure eigenvector mass and flatness on the canonical maximum clique
/// and test the two localization events at slack `kappa`.
pub fn eigenvector_report(
    z: &WeightedGraph,
    summary: &SpectralSummary,
    kappa: f64,
) -> Result<EigenvectorReport, StructureError> {
    check_kappa(kappa)?;
    check_vector(z, summary)?;
    let u = normalized_squares(&summary.top_eigenvector)?;
    let clique = canonical_max_clique(z);
    if clique.is_empty() {
        return Err(StructureError::EmptyGraph);
    }
    let (mass, flatness) = mass_and_flatness(&u, &clique);
    Ok(EigenvectorReport {
        mass_on_clique: mass,
        flatness,
        localized: mass >= 1.0 - kappa,
        flat: flatness <= KAPPA0_FACTOR * kappa / clique.len() as f64,
    })
}

/// Weight uniformity on the near-flat part of the clique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFlatnessReport {
    /// Vertices of `K_X` whose normalized squared coordinate is within
    /// `(40 kappa)^{1/4} / |K_X|` of the flat value, ascending.
    pub t_set: Vec<usize>,
    /// Normalized aggregate deviation of the weights on `t_set` from
    /// `L / h(delta)`; near 0 when the weights are flat at the predicted
    /// value, and of order 1 when they are not.
    pub statistic: f64,
}

/// Extract the near-flat vertex set `T` of the canonical maximum clique and
/// the normalized deviation of the weight magnitudes on `T` from the
/// predicted flat profile `L / h(delta)`.
///
/// The normalization divides the raw aggregate `(1/h^2) sum | |Z_ij| - L/h |`
/// by `L / h`, so the prediction that the weights are uniform at scale `L/h`
/// reads as `statistic -> 0`. The optimal size `h(delta)` rather than the
/// realized `|K_X|` sets the scale, which keeps the statistic comparable
/// across samples whose realized clique deviates from the optimum.
pub fn gaussian_flatness_report(
    z: &WeightedGraph,
    summary: &SpectralSummary,
    delta: f64,
    kappa: f64,
) -> Result<GaussianFlatnessReport, StructureError> {
    check_kappa(kappa)?;
    check_vector(z, summary)?;
    let h = rate::h(delta)? as f64;
    let u = normalized_squares(&summary.top_eigenvector)?;
    let clique = canonical_max_clique(z);
    if clique.is_empty() {
        return Err(StructureError::EmptyGraph);
    }
    let t_set = near_flat_set(&u, &clique, kappa);
    let level = upper_tail_level(z.n(), delta);
    let statistic = gaussian_deviation(z, &t_set, h, level);
    Ok(GaussianFlatnessReport { t_set, statistic })
}

/// Full per-sample structure readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    /// Maximum clique size of the support.
    pub k_x: usize,
    /// Canonical maximum clique `K_X`, ascending.
    pub clique_vertices: Vec<usize>,
    /// Whether the maximum clique is unique, by exact enumeration of all
    /// maximum cliques.
    pub unique_max_clique: bool,
    /// Whether every clique with at least 4 vertices is contained in `K_X`,
    /// by exact enumeration; vacuously true when no such clique exists.
    pub all_big_cliques_inside: bool,
    /// Fraction of the squared eigenvector mass on `K_X`, in `[0, 1]`.
    pub mass_on_clique: f64,
    /// `sum_{i in K_X} (u_i - 1/k_X)^2`, nonnegative.
    pub flatness: f64,
    /// Near-flat subset of `K_X`; always a subset of `clique_vertices`.
    pub t_set: Vec<usize>,
    /// Normalized weight deviation on `t_set` from `L / h(delta)`.
    pub gaussian_l1_dev: f64,
}

fn contains_sorted(haystack: &[usize], needle: &[usize]) -> bool {
    needle.iter().all(|v| haystack.binary_search(v).is_ok())
}

/// Assemble the full structure readout for one conditioned sample.
pub fn structure_report(
    z: &WeightedGraph,
    summary: &SpectralSummary,
    delta: f64,
    kappa: f64,
) -> Result<StructureReport, StructureError> {
    check_kappa(kappa)?;
    check_vector(z, summary)?;
    let h = rate::h(delta)? as f64;
    let u = normalized_squares(&summary.top_eigenvector)?;
    let cliques = all_maximum_cliques(z);
    let clique = canonical_max_clique(z);
    if clique.is_empty() {
        return Err(StructureError::EmptyGraph);
    }
    let big = maximal_cliques_min_size(z, 4);
    let all_inside = big.iter().all(|c| contains_sorted(&clique, c));
    let (mass, flatness) = mass_and_flatness(&u, &clique);
    let t_set = near_flat_set(&u, &clique, kappa);
    let level = upper_tail_level(z.n(), delta);
    let gaussian_l1_dev = gaussian_deviation(z, &t_set, h, level);
    debug_assert!((0.0..=1.0 + 1e-12).contains(&mass));
    debug_assert!(flatness >= 0.0);
    debug_assert!(contains_sorted(&clique, &t_set));
    Ok(StructureReport {
        k_x: clique.len(),
        clique_vertices: clique,
        unique_max_clique: cliques.len() == 1,
        all_big_cliques_inside: all_inside,
        mass_on_clique: mass,
        flatness,
        t_set,
        gaussian_l1_dev,
    })
}

/// Ensemble-level clique statistics against the rate-function predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueSummary {
    /// Method that produced the analyzed ensemble.
    pub method: ConditioningMethod,
    /// Number of samples analyzed.
    pub samples: usize,
    /// Minimizer set `M(delta)` of the rate function.
    pub minimizers: Vec<u32>,
    /// Fraction of samples whose maximum clique size lies in `M(delta)`.
    pub minimizer_frequency: f64,
    /// Fraction of samples whose maximum clique is unique.
    pub unique_frequency: f64,
    /// Fraction of samples in which every clique with at least 4 vertices
    /// is contained in the canonical maximum clique.
    pub containment_frequency: f64,
    /// Set when `delta <= 3`: below the first ladder point the optimal
    /// clique size is 2 and the structure predictions are not theorems, so
    /// the statistics are descriptive only.
    pub regime_warning: bool,
}

/// Compare the maximum cliques of a conditioned ensemble against the rate
/// minimizers: frequency of `k_X` in `M(delta)`, of uniqueness of the
/// maximum clique, and of big-clique containment, all by exact enumeration
/// per sample. Samples are analyzed in parallel; the counters merge by
/// addition, so the result is independent of the thread schedule.
pub fn clique_statistics(
    ensemble: &ConditionedEnsemble,
    delta: f64,
) -> Result<CliqueSummary, StructureError> {
    if ensemble.samples.is_empty() {
        return Err(StructureError::EmptySample);
    }
    let minimizers = rate::psi(delta)?.minimizers;
    let (in_min, unique, contained) = ensemble
        .samples
        .par_iter()
        .map(|(g, summary)| {
            let cliques = all_maximum_cliques(g);
            let k_x = cliques.first().map_or(0, |c| c.len());
            debug_assert_eq!(k_x, summary.clique_number);
            let canonical = canonical_max_clique(g);
            let big = maximal_cliques_min_size(g, 4);
            let all_inside = big.iter().all(|c| contains_sorted(&canonical, c));
            (
                u64::from(minimizers.contains(&(k_x as u32))),
                u64::from(cliques.len() == 1),
                u64::from(all_inside),
            )
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let total = ensemble.samples.len() as f64;
    Ok(CliqueSummary {
        method: ensemble.method,
        samples: ensemble.samples.len(),
        minimizers,
        minimizer_frequency: in_min as f64 / total,
        unique_frequency: unique as f64 / total,
        containment_frequency: contained as f64 / total,
        regime_warning: delta <= REGIME_BOUNDARY,
    })
}

/// Spread of the squared coordinates over `clique`, centered at their mean:
/// `sum_{i in K} (v_i^2 - a)^2` with `a = (1/|K|) sum_{i in K} v_i^2`.
///
/// Takes raw coordinates, not normalized ones, so it applies to arbitrary
/// vectors. [`flatness_from_pairs`] computes the same quantity without ever
/// forming the mean; the two routes share no algebra and cross-check each
/// other exactly.
pub fn flatness_about_mean(v: &[f64], clique: &[usize]) -> f64 {
    if clique.is_empty() {
        return 0.0;
    }
    let k = clique.len() as f64;
    let mean: f64 = clique.iter().map(|&i| v[i] * v[i]).sum::<f64>() / k;
    clique
        .iter()
        .map(|&i| {
            let dev = v[i] * v[i] - mean;
            dev * dev
        })
        .sum()
}

/// Spread of the squared coordinates over `clique` through pairwise
/// differences: `(1/|K|) sum_{i<j in K} (v_i^2 - v_j^2)^2`.
///
/// Identical to [`flatness_about_mean`] for every vector and clique, by the
/// exact rearrangement of the pairwise sum around the mean.
pub fn flatness_from_pairs(v: &[f64], clique: &[usize]) -> f64 {
    if clique.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for (a, &i) in clique.iter().enumerate() {
        for &j in &clique[a + 1..] {
            let diff = v[i] * v[i] - v[j] * v[j];
            sum += diff * diff;
        }
    }
    sum / clique.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// A complete graph on `0..k` with the given uniform weight, padded
    /// with isolated vertices up to `n`.
    fn clique_graph(n: usize, k: usize, w: f64) -> WeightedGraph {
        let mut edges = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                edges.push((i, j, w));
            }
        }
        WeightedGraph::new(n, edges).unwrap()
    }

    fn summarized(g: WeightedGraph) -> (WeightedGraph, SpectralSummary) {
        let summary = crate::graph::summarize(&g, EIG_TOL).unwrap();
        (g, summary)
    }

    #[test]
    fn spec_validation_rejects_bad_inputs() {
        let m = ConditioningMethod::Rejection;
        assert!(ConditioningSpec::new(0.5, m, 0.2, 10).is_ok());
        assert!(matches!(
            ConditioningSpec::new(0.0, m, 0.2, 10),
            Err(StructureError::Rate(_))
        ));
        assert!(matches!(
            ConditioningSpec::new(f64::NAN, m, 0.2, 10),
            Err(StructureError::Rate(_))
        ));
        for kappa in [0.0, 1.0, -0.3, f64::NAN] {
            assert!(matches!(
                ConditioningSpec::new(0.5, m, kappa, 10),
                Err(StructureError::BadKappa { .. })
            ));
        }
        assert!(matches!(
            ConditioningSpec::new(0.5, m, 0.2, 0),
            Err(StructureError::ZeroTargets)
        ));
    }

    #[test]
    fn planted_proxy_accepts_every_draw() {
        let params = ModelParams::new(128, 2.0, 0).unwrap();
        let spec =
            ConditioningSpec::new(6.0, ConditioningMethod::PlantedProxy, 0.2, 12).unwrap();
        let ensemble = conditioned_samples(&params, &spec, &mut rng(7)).unwrap();
        assert_eq!(ensemble.method, ConditioningMethod::PlantedProxy);
        assert_eq!(ensemble.samples.len(), 12);
        assert_eq!(ensemble.attempts, 12);
        assert_eq!(ensemble.acceptance_rate, 1.0);
        for (_, summary) in &ensemble.samples {
            assert!(summary.lambda1 >= ensemble.level);
        }
    }

    #[test]
    fn rejection_samples_satisfy_event_at_plausible_rate() {
        let params = ModelParams::new(64, 2.5, 0).unwrap();
        let spec = ConditioningSpec::new(0.4, ConditioningMethod::Rejection, 0.2, 40).unwrap();
        let ensemble = conditioned_samples(&params, &spec, &mut rng(11)).unwrap();
        assert_eq!(ensemble.method, ConditioningMethod::Rejection);
        assert_eq!(ensemble.samples.len(), 40);
        for (_, summary) in &ensemble.samples {
            assert!(summary.lambda1 >= ensemble.level);
        }
        // Loose agreement with an independent naive estimate; the
        // integration suite checks the confidence intervals properly.
        let naive = upper_tail_naive(&params, 0.4, 2000, &mut rng(12)).unwrap();
        assert!((ensemble.acceptance_rate - naive.probability).abs() < 0.2);
    }

    #[test]
    fn rejection_refuses_rare_events() {
        let params = ModelParams::new(64, 1.0, 0).unwrap();
        let spec = ConditioningSpec::new(8.0, ConditioningMethod::Rejection, 0.2, 5).unwrap();
        let err = conditioned_samples(&params, &spec, &mut rng(3)).unwrap_err();
        assert!(matches!(err, StructureError::EventTooRare { .. }));
    }

    #[test]
    fn rejection_reports_budget_exhaustion() {
        let params = ModelParams::new(64, 2.5, 0).unwrap();
        let level = upper_tail_level(64, 0.4);
        let err = rejection_with_cap(&params, level, 50, 3, &mut rng(5)).unwrap_err();
        match err {
            StructureError::BudgetExceeded {
                collected,
                target,
                attempts,
            } => {
                assert!(collected <= 3);
                assert_eq!(target, 50);
                assert_eq!(attempts, 3);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn canonical_clique_prefers_total_weight_then_lex_order() {
        // Two disjoint triangles; the second is heavier.
        let edges = vec![
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 2, 1.0),
            (3, 4, -3.0),
            (3, 5, 3.0),
            (4, 5, 3.0),
        ];
        let g = WeightedGraph::new(6, edges).unwrap();
        assert_eq!(canonical_max_clique(&g), vec![3, 4, 5]);
        // Equal weights: lexicographically smallest wins.
        let edges = vec![
            (2, 3, 1.0),
            (2, 4, 1.0),
            (3, 4, 1.0),
            (5, 6, 1.0),
            (5, 7, 1.0),
            (6, 7, 1.0),
        ];
        let g = WeightedGraph::new(8, edges).unwrap();
        assert_eq!(canonical_max_clique(&g), vec![2, 3, 4]);
    }

    #[test]
    fn clique_statistics_counts_exactly() {
        // Sample a: a 3-clique and a pendant edge, maximum clique unique of
        // size 3. Sample b: two disjoint 4-cliques, tied maximum, and the
        // loser is a big clique outside the canonical choice.
        let a = {
            let mut edges = vec![(0, 1, 2.0), (0, 2, 2.0), (1, 2, 2.0)];
            edges.push((3, 4, 1.0));
            WeightedGraph::new(8, edges).unwrap()
        };
        let b = {
            let mut edges = Vec::new();
            for i in 0..4 {
                for j in (i + 1)..4 {
                    edges.push((i, j, 2.0));
                    edges.push((4 + i, 4 + j, 1.0));
                }
            }
            WeightedGraph::new(8, edges).unwrap()
        };
        let ensemble = ConditionedEnsemble {
            method: ConditioningMethod::PlantedProxy,
            level: 0.0,
            acceptance_rate: 1.0,
            attempts: 2,
            samples: vec![summarized(a), summarized(b)],
        };
        // M(10) = {3}: sample a hits, sample b misses.
        let summary = clique_statistics(&ensemble, 10.0).unwrap();
        assert_eq!(summary.minimizers, vec![3]);
        assert_eq!(summary.samples, 2);
        assert_eq!(summary.minimizer_frequency, 0.5);
        assert_eq!(summary.unique_frequency, 0.5);
        assert_eq!(summary.containment_frequency, 0.5);
        assert!(!summary.regime_warning);
        let below = clique_statistics(&ensemble, 2.5).unwrap();
        assert!(below.regime_warning);
        assert_eq!(below.minimizers, vec![2]);
        assert_eq!(below.minimizer_frequency, 0.0);
    }

    #[test]
    fn clique_statistics_rejects_empty_ensembles() {
        let ensemble = ConditionedEnsemble {
            method: ConditioningMethod::Rejection,
            level: 1.0,
            acceptance_rate: 0.0,
            attempts: 0,
            samples: Vec::new(),
        };
        assert!(matches!(
            clique_statistics(&ensemble, 5.0),
            Err(StructureError::EmptySample)
        ));
    }

    #[test]
    fn unit_clique_eigenvector_is_localized_and_flat() {
        let (g, summary) = summarized(clique_graph(8, 5, 1.0));
        let report = eigenvector_report(&g, &summary, 0.05).unwrap();
        assert!(report.mass_on_clique >= 1.0 - 1e-10);
        assert!(report.mass_on_clique <= 1.0 + 1e-12);
        assert!(report.flatness <= 1e-12);
        assert!(report.localized);
        assert!(report.flat);
    }

    #[test]
    fn report_is_scale_invariant_and_mass_partitions() {
        let params = ModelParams::new(96, 2.0, 0).unwrap();
        let spec =
            ConditioningSpec::new(6.0, ConditioningMethod::PlantedProxy, 0.2, 4).unwrap();
        let ensemble = conditioned_samples(&params, &spec, &mut rng(23)).unwrap();
        for (g, summary) in &ensemble.samples {
            let report = eigenvector_report(g, summary, 0.2).unwrap();
            // Off-clique mass computed independently from raw coordinates.
            let clique = canonical_max_clique(g);
            let norm_sq: f64 = summary.top_eigenvector.iter().map(|x| x * x).sum();
            let off: f64 = (0..g.n())
                .filter(|i| !clique.contains(i))
                .map(|i| summary.top_eigenvector[i].powi(2) / norm_sq)
                .sum();
            assert!((report.mass_on_clique + off - 1.0).abs() < 1e-12);
            // Rescaling the eigenvector changes nothing.
            let mut scaled = summary.clone();
            for x in &mut scaled.top_eigenvector {
                *x *= 7.3;
            }
            let rescaled = eigenvector_report(g, &scaled, 0.2).unwrap();
            assert!((rescaled.mass_on_clique - report.mass_on_clique).abs() < 1e-12);
            assert!((rescaled.flatness - report.flatness).abs() < 1e-12);
        }
    }

    #[test]
    fn flatness_routes_agree_on_random_vectors() {
        let mut r = rng(31);
        for _ in 0..500 {
            let n = 2 + (r.random::<u64>() % 11) as usize;
            let v: Vec<f64> = (0..n).map(|_| r.random::<f64>() * 10.0 - 5.0).collect();
            let size = 1 + (r.random::<u64>() % n as u64) as usize;
            let mut clique: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = (r.random::<u64>() % (i as u64 + 1)) as usize;
                clique.swap(i, j);
            }
            clique.truncate(size);
            let a = flatness_about_mean(&v, &clique);
            let b = flatness_from_pairs(&v, &clique);
            assert!(
                (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                "routes disagree: {a} vs {b}"
            );
        }
    }

    #[test]
    fn near_flat_set_is_large_when_flatness_event_holds() {
        // Pure algebra: flatness <= kappa_0 / k forces
        // |T| >= (1 - kappa_0^{1/4}) k. Exercised on noisy profiles.
        let mut r = rng(41);
        let kappa = 0.01;
        let kappa0 = KAPPA0_FACTOR * kappa;
        let mut held = 0;
        for trial in 0..400 {
            let k = 3 + (trial % 6) as usize;
            let noise = 0.002 * (1.0 + (trial % 7) as f64);
            let mut u: Vec<f64> = (0..k)
                .map(|_| (1.0 / k as f64 + noise * (r.random::<f64>() - 0.5)).max(0.0))
                .collect();
            let total: f64 = u.iter().sum();
            for x in &mut u {
                *x /= total;
            }
            let clique: Vec<usize> = (0..k).collect();
            let (_, flatness) = mass_and_flatness(&u, &clique);
            if flatness <= kappa0 / k as f64 {
                held += 1;
                let t = near_flat_set(&u, &clique, kappa);
                let bound = (1.0 - kappa0.powf(0.25)) * k as f64;
                assert!(
                    t.len() as f64 >= bound,
                    "flatness {flatness} yet |T| = {} < {bound}",
                    t.len()
                );
            }
        }
        assert!(held >= 50, "only {held} trials hit the flatness event");
    }

    #[test]
    fn exactly_flat_planted_weights_give_zero_statistic() {
        // M(10) = {3}: a 3-clique whose weights equal L/3 exactly is the
        // flat configuration, so T is the whole clique and the statistic
        // vanishes.
        let n = 32;
        let delta = 10.0;
        let h = rate::h(delta).unwrap() as f64;
        let level = upper_tail_level(n, delta);
        let (g, summary) = summarized(clique_graph(n, 3, level / h));
        let report = gaussian_flatness_report(&g, &summary, delta, 0.2).unwrap();
        assert_eq!(report.t_set, vec![0, 1, 2]);
        assert!(report.statistic.abs() <= 1e-12);
        let full = structure_report(&g, &summary, delta, 0.2).unwrap();
        assert_eq!(full.k_x, 3);
        assert_eq!(full.clique_vertices, vec![0, 1, 2]);
        assert!(full.unique_max_clique);
        assert!(full.all_big_cliques_inside);
        assert!(full.gaussian_l1_dev.abs() <= 1e-12);
    }

    #[test]
    fn reports_are_invariant_under_sign_conjugation() {
        // Flipping the signs of all weights incident to a vertex set
        // conjugates the matrix by a diagonal of signs: the spectrum is
        // unchanged and squared eigenvector coordinates are preserved.
        let params = ModelParams::new(64, 2.0, 0).unwrap();
        let spec =
            ConditioningSpec::new(6.0, ConditioningMethod::PlantedProxy, 0.2, 3).unwrap();
        let ensemble = conditioned_samples(&params, &spec, &mut rng(57)).unwrap();
        let mut r = rng(58);
        for (g, summary) in &ensemble.samples {
            let signs: Vec<f64> = (0..g.n())
                .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let flipped_edges: Vec<(usize, usize, f64)> = g
                .edges()
                .iter()
                .map(|&(i, j, w)| (i, j, signs[i] * signs[j] * w))
                .collect();
            let flipped = WeightedGraph::new(g.n(), flipped_edges).unwrap();
            let flipped_summary = crate::graph::summarize(&flipped, EIG_TOL).unwrap();
            assert!(
                (flipped_summary.lambda1 - summary.lambda1).abs()
                    <= 1e-8 * summary.lambda1.abs().max(1.0)
            );
            let before = eigenvector_report(g, summary, 0.2).unwrap();
            let after = eigenvector_report(&flipped, &flipped_summary, 0.2).unwrap();
            assert!((before.mass_on_clique - after.mass_on_clique).abs() < 1e-6);
            assert!((before.flatness - after.flatness).abs() < 1e-6);
            let gb = gaussian_flatness_report(g, summary, 6.0, 0.2).unwrap();
            let ga = gaussian_flatness_report(&flipped, &flipped_summary, 6.0, 0.2).unwrap();
            assert_eq!(gb.t_set, ga.t_set);
            assert!((gb.statistic - ga.statistic).abs() < 1e-6);
        }
    }

    #[test]
    fn planted_ensemble_matches_minimizer_prediction() {
        let params = ModelParams::new(128, 2.0, 0).unwrap();
        let spec =
            ConditioningSpec::new(10.0, ConditioningMethod::PlantedProxy, 0.2, 30).unwrap();
        let ensemble = conditioned_samples(&params, &spec, &mut rng(71)).unwrap();
        let summary = clique_statistics(&ensemble, 10.0).unwrap();
        assert!(!summary.regime_warning);
        // The planted 3-clique is almost always the maximum clique at this
        // density; background 4-cliques are vanishingly rare.
        assert!(summary.minimizer_frequency >= 0.5);
        assert!(summary.containment_frequency >= 0.5);
        assert!((0.0..=1.0).contains(&summary.unique_frequency));
    }

    #[test]
    fn degenerate_inputs_error_cleanly() {
        let (g, summary) = summarized(clique_graph(6, 3, 1.0));
        assert!(matches!(
            eigenvector_report(&g, &summary, 1.0),
            Err(StructureError::BadKappa { .. })
        ));
        let mut wrong = summary.clone();
        wrong.top_eigenvector.pop();
        assert!(matches!(
            eigenvector_report(&g, &wrong, 0.2),
            Err(StructureError::DimensionMismatch { .. })
        ));
        let mut zero = summary.clone();
        for x in &mut zero.top_eigenvector {
            *x = 0.0;
        }
        assert!(matches!(
            eigenvector_report(&g, &zero, 0.2),
            Err(StructureError::ZeroVector)
        ));
        assert!(matches!(
            gaussian_flatness_report(&g, &summary, -1.0, 0.2),
            Err(StructureError::Rate(_))
        ));
    }

    #[test]
    fn method_serialization_is_kebab_case() {
        let r = serde_json::to_string(&ConditioningMethod::Rejection).unwrap();
        assert_eq!(r, "\"rejection\"");
        let p = serde_json::to_string(&ConditioningMethod::PlantedProxy).unwrap();
        assert_eq!(p, "\"planted-proxy\"");
        assert_eq!(ConditioningMethod::PlantedProxy.to_string(), "planted-proxy");
        let back: ConditioningMethod = serde_json::from_str("\"planted-proxy\"").unwrap();
        assert_eq!(back, ConditioningMethod::PlantedProxy);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn vector_and_clique() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
        (2usize..12).prop_flat_map(|n| {
            (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n),
            )
        })
    }

    proptest! {
        #[test]
        fn flatness_identity_holds((v, clique) in vector_and_clique()) {
            let a = flatness_about_mean(&v, &clique);
            let b = flatness_from_pairs(&v, &clique);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn mass_and_flags_are_consistent(
            (v, clique) in vector_and_clique(),
            kappa in 0.01f64..0.99,
        ) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let u = normalized_squares(&v).unwrap();
            let (mass, flatness) = mass_and_flatness(&u, &clique);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&mass));
            prop_assert!(flatness >= 0.0);
            let t = near_flat_set(&u, &clique, kappa);
            prop_assert!(t.iter().all(|i| clique.contains(i)));
            let kappa0 = KAPPA0_FACTOR * kappa;
            if flatness <= kappa0 / clique.len() as f64 {
                let bound = (1.0 - kappa0.powf(0.25)) * clique.len() as f64;
                prop_assert!(t.len() as f64 >= bound);
            }
        }

        #[test]
        fn spec_validation_is_total(
            delta in -1.0f64..5.0,
            kappa in -0.5f64..1.5,
            target in 0usize..4,
        ) {
            let out = ConditioningSpec::new(
                delta,
                ConditioningMethod::Rejection,
                kappa,
                target,
            );
            let valid = delta > 0.0 && kappa > 0.0 && kappa < 1.0 && target > 0;
            prop_assert_eq!(out.is_ok(), valid);
        }
    }
}
