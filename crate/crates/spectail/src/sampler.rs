//! Reproducible sampling for sparse Gaussian networks, conditioned-Gaussian
//! draws, the weight-threshold decomposition, clique planting, and structural
//! diagnostics of sparse supports.
//!
//! The ensemble couples two independent sources of randomness on the vertex
//! set `{0, .., n-1}`: every unordered pair is an edge with probability
//! `p = d/n`, and each present edge carries an independent standard Gaussian
//! weight. Writing `X` for the 0/1 adjacency matrix and `Y` for the weight
//! matrix, the network is the entrywise product `Z = X .* Y`.
//!
//! Splitting each weight at a magnitude threshold `tau = sqrt(eps log log n)`
//! decomposes `Z` into a heavy part `Z1` (weights strictly above `tau` in
//! absolute value) and the light remainder `Z2`. The support of `Z1` is again
//! Erdos-Renyi with edge density `q = p * P(|Y| > tau)`; for large `n` this
//! is at most `d' / (n (log n)^{eps/2})` with `d' = d / sqrt(2 pi)`, so far
//! below the connectivity scale that the components of `Z1` are
//! sub-logarithmic and almost all trees. [`diagnostics`] measures exactly
//! those structural events, and [`DecompositionPlan`] carries the associated
//! constants, including the reduced tail target `delta'` that the heavy part
//! must reach once the light part is discounted.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::graph::{connected_components, max_degree, tree_excess, GraphError, WeightedGraph};

/// Domain violations for samplers, plans, and diagnostics.
#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("vertex count must be at least 1, got {n}")]
    BadVertexCount { n: usize },
    #[error("mean degree must satisfy 0 <= d < n, got d = {d} with n = {n}")]
    BadMeanDegree { d: f64, n: usize },
    #[error("log log n must be positive: need n >= 16, got n = {n}")]
    SmallN { n: usize },
    #[error("epsilon must lie in (0, 1], got {epsilon}")]
    BadEpsilon { epsilon: f64 },
    #[error("delta must be a positive finite real, got {delta}")]
    BadDelta { delta: f64 },
    #[error(
        "no real reduced tail target: need epsilon*(1+delta) <= 2, \
         got epsilon = {epsilon}, delta = {delta}"
    )]
    InadmissibleSparsification { epsilon: f64, delta: f64 },
    #[error("truncation point must be a nonnegative finite real, got {t}")]
    BadTruncation { t: f64 },
    #[error("clique size must satisfy 2 <= k <= n, got k = {k} with n = {n}")]
    BadCliqueSize { k: usize, n: usize },
    #[error("graph has {graph_n} vertices but the plan was built for {plan_n}")]
    PlanMismatch { graph_n: usize, plan_n: usize },
    #[error("diagnostic threshold {name} must be positive, got {value}")]
    BadEventThreshold { name: &'static str, value: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parameters of the sparse Gaussian network ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Vertex count.
    pub n: usize,
    /// Mean degree; every unordered pair is an edge with probability `d/n`.
    pub d: f64,
    /// Master seed all child RNG streams derive from.
    pub seed: u64,
}

impl ModelParams {
    /// Validates `n >= 1` and `0 <= d < n`, so `p = d/n` is a probability
    /// strictly below 1. `d = 0` is allowed and produces empty graphs.
    pub fn new(n: usize, d: f64, seed: u64) -> Result<Self, SamplerError> {
        if n == 0 {
            return Err(SamplerError::BadVertexCount { n });
        }
        if !d.is_finite() || d < 0.0 || d >= n as f64 {
            return Err(SamplerError::BadMeanDegree { d, n });
        }
        Ok(Self { n, d, seed })
    }

    /// Edge probability `p = d/n`.
    pub fn edge_probability(&self) -> f64 {
        self.d / self.n as f64
    }
}

/// Constants of the weight-threshold split `Z = Z1 + Z2` at a given `(n, d)`.
///
/// `delta_prime` is the reduced tail parameter defined by
/// `sqrt(2(1+delta')) = sqrt(2(1+delta)) - sqrt(eps)*(1+delta)`: if the light
/// part is allowed spectral norm `sqrt(eps)*(1+delta)*sqrt(log n)` and the
/// full network must reach `sqrt(2(1+delta) log n)`, the heavy part must
/// still reach `sqrt(2(1+delta') log n)`. Expanding the square gives
/// `delta' = delta - sqrt(2 eps)(1+delta)^{3/2} + eps (1+delta)^2 / 2`, and
/// the defining right side is nonnegative exactly when
/// `eps*(1+delta) <= 2`; under that admissibility condition
/// `delta - sqrt(2 eps)(1+delta)^{3/2} <= delta' <= delta` holds as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionPlan {
    /// Vertex count the thresholds were computed for.
    pub n: usize,
    /// Mean degree of the network being split.
    pub d: f64,
    /// Sparsification exponent in (0, 1].
    pub epsilon: f64,
    /// Weight magnitude cut `sqrt(epsilon * log log n)`.
    pub threshold: f64,
    /// Tail parameter targeted by the full network.
    pub delta: f64,
    /// Reduced tail parameter left for the heavy part; may be negative when
    /// epsilon is too large for the target delta (downstream rate evaluation
    /// needs it positive).
    pub delta_prime: f64,
    /// Large-n bound on the heavy-support edge density:
    /// `d' / (n (log n)^{eps/2})` with `d' = d / sqrt(2 pi)`. Valid once the
    /// threshold exceeds roughly 3/2, since it relies on
    /// `P(|Y| > t) <= exp(-t^2/2) / sqrt(2 pi)`.
    pub q_bound: f64,
}

impl DecompositionPlan {
    pub fn new(n: usize, d: f64, epsilon: f64, delta: f64) -> Result<Self, SamplerError> {
        if n < 16 {
            return Err(SamplerError::SmallN { n });
        }
        if !d.is_finite() || d < 0.0 || d >= n as f64 {
            return Err(SamplerError::BadMeanDegree { d, n });
        }
        if !epsilon.is_finite() || epsilon <= 0.0 || epsilon > 1.0 {
            return Err(SamplerError::BadEpsilon { epsilon });
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(SamplerError::BadDelta { delta });
        }
        if epsilon * (1.0 + delta) > 2.0 {
            return Err(SamplerError::InadmissibleSparsification { epsilon, delta });
        }
        let log_n = (n as f64).ln();
        let threshold = (epsilon * log_n.ln()).sqrt();
        let root = (2.0 * (1.0 + delta)).sqrt() - epsilon.sqrt() * (1.0 + delta);
        let delta_prime = root * root / 2.0 - 1.0;
        let d_prime = d / (2.0 * std::f64::consts::PI).sqrt();
        let q_bound = d_prime / (n as f64 * log_n.powf(epsilon / 2.0));
        Ok(Self {
            n,
            d,
            epsilon,
            threshold,
            delta,
            delta_prime,
            q_bound,
        })
    }
}

/// Deterministic child generator: stream `stream` of the master seed.
///
/// Independent workers get disjoint ChaCha streams of one seeded cipher, so a
/// run is reproducible regardless of how trials are scheduled across threads.
pub fn child_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Draws one network: edges with probability `d/n`, standard Gaussian weights.
///
/// Runs in expected time O(d n) by skipping over the `C(n, 2)` pair sequence
/// with geometric gaps instead of flipping a coin per pair: if each position
/// is an edge with probability `p`, the gap to the next edge is distributed
/// as `floor(log u / log(1-p))` for `u` uniform on (0, 1].
pub fn sample_network(params: &ModelParams, rng: &mut impl Rng) -> WeightedGraph {
    let n = params.n;
    let p = params.edge_probability();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    if n >= 2 && p > 0.0 {
        let total = n * (n - 1) / 2;
        // p < 1 because d < n, so the log is finite and strictly negative.
        let ln_keep = (-p).ln_1p();
        let mut pos: usize = 0;
        let mut row = 0usize;
        let mut row_start = 0usize;
        loop {
            let u = 1.0 - rng.random::<f64>(); // uniform on (0, 1]: no log(0)
            let skip = (u.ln() / ln_keep) as usize; // saturating float cast
            pos = match pos.checked_add(skip) {
                Some(next) => next,
                None => break,
            };
            if pos >= total {
                break;
            }
            // Pair index -> (row, col): row i owns the n-1-i indices with
            // i < j. Positions arrive in increasing order, so the row pointer
            // only ever advances.
            while pos >= row_start + (n - 1 - row) {
                row_start += n - 1 - row;
                row += 1;
            }
            let col = row + 1 + (pos - row_start);
            let w: f64 = rng.sample(StandardNormal);
            edges.push((row, col, w));
            pos += 1;
        }
    }
    WeightedGraph::new(n, edges).expect("sampled edges are sorted, in range, and finite")
}

fn unit_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal parameters are valid")
}

/// One draw of N(0,1) conditioned on `|value| > t`.
///
/// Uses symmetric inverse-survival sampling: draw the magnitude as
/// `Q^{-1}(u * Q(t))` for `u` uniform on (0, 1] (`Q` the upper tail of the
/// standard normal), then attach an independent fair sign. Exact for every
/// `t`, with none of the rejection-loop slowdown at large `t`. Draws deeper
/// than double precision can resolve saturate near 38 standard deviations.
pub fn sample_truncated_gaussian(t: f64, rng: &mut impl Rng) -> Result<f64, SamplerError> {
    if !t.is_finite() || t < 0.0 {
        return Err(SamplerError::BadTruncation { t });
    }
    let normal = unit_normal();
    let u = 1.0 - rng.random::<f64>();
    let scaled = (u * normal.sf(t)).max(f64::MIN_POSITIVE);
    let mut magnitude = -normal.inverse_cdf(scaled);
    if magnitude <= t {
        // Boundary rounding of the inverse CDF must not leak outside the
        // conditioning support.
        magnitude = t.next_up();
    }
    let negative: bool = rng.random();
    Ok(if negative { -magnitude } else { magnitude })
}

/// One draw of N(0,1) conditioned on `value >= level` (one-sided tail).
fn gaussian_at_least(level: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(level.is_finite());
    let normal = unit_normal();
    let u = 1.0 - rng.random::<f64>();
    let scaled = (u * normal.sf(level)).max(f64::MIN_POSITIVE);
    let draw = -normal.inverse_cdf(scaled);
    draw.max(level)
}

/// Splits a network at the plan's weight threshold.
///
/// The first output keeps the edges with `|weight| > threshold` (the heavy
/// part), the second keeps the rest; together they partition the edge set
/// with weights unchanged. The split is deterministic, and the triangle
/// inequality for the spectral norm gives
/// `lambda_1(z) <= lambda_1(heavy) + lambda_1(light)`.
pub fn decompose(
    z: &WeightedGraph,
    plan: &DecompositionPlan,
) -> Result<(WeightedGraph, WeightedGraph), SamplerError> {
    if z.n() != plan.n {
        return Err(SamplerError::PlanMismatch {
            graph_n: z.n(),
            plan_n: plan.n,
        });
    }
    let mut heavy: Vec<(usize, usize, f64)> = Vec::new();
    let mut light: Vec<(usize, usize, f64)> = Vec::new();
    for &(i, j, w) in z.edges() {
        if w.abs() > plan.threshold {
            heavy.push((i, j, w));
        } else {
            light.push((i, j, w));
        }
    }
    let heavy = WeightedGraph::new(z.n(), heavy)?;
    let light = WeightedGraph::new(z.n(), light)?;
    Ok((heavy, light))
}

/// Conditioning level `sqrt(2(1+delta) log n) / (k-1)` for a planted k-clique.
///
/// A complete k-clique whose weights all reach this level pushes the largest
/// eigenvalue to at least `(k-1) * level = sqrt(2(1+delta) log n)`: the
/// uniform unit vector on the clique already attains that quadratic form.
pub fn planting_level(n: usize, k: usize, delta: f64) -> f64 {
    debug_assert!(k >= 2 && n >= k);
    (2.0 * (1.0 + delta) * (n as f64).ln()).sqrt() / (k - 1) as f64
}

/// Samples a background network and plants a weighted k-clique in it.
///
/// A uniformly random k-subset S is forced complete, and the weights inside S
/// are replaced (not superimposed) by Gaussians conditioned to be at least
/// [`planting_level`]. Background edges outside S are untouched. The sign of
/// planted weights is positive: the tail event is symmetric under global sign
/// flips of the eigenvector, so one-sided planting loses no generality.
///
/// Every sample satisfies `lambda_1 >= sqrt(2(1+delta) log n)`, asserted via
/// the uniform-vector certificate on each forced weight.
pub fn plant_clique(
    params: &ModelParams,
    k: usize,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<(WeightedGraph, Vec<usize>), SamplerError> {
    let n = params.n;
    if k < 2 || k > n {
        return Err(SamplerError::BadCliqueSize { k, n });
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(SamplerError::BadDelta { delta });
    }
    let level = planting_level(n, k, delta);
    let background = sample_network(params, rng);
    let mut subset = rand::seq::index::sample(rng, n, k).into_vec();
    subset.sort_unstable();
    let mut planted = vec![false; n];
    for &v in &subset {
        planted[v] = true;
    }
    let mut edges: Vec<(usize, usize, f64)> = background
        .edges()
        .iter()
        .copied()
        .filter(|&(i, j, _)| !(planted[i] && planted[j]))
        .collect();
    for a in 0..k {
        for b in (a + 1)..k {
            let w = gaussian_at_least(level, rng);
            // Certifies lambda_1 >= (k-1)*level on every sample: the uniform
            // unit vector on S has quadratic form (2/k) * sum of weights.
            assert!(w >= level);
            edges.push((subset[a], subset[b], w));
        }
    }
    let network = WeightedGraph::new(n, edges)?;
    Ok((network, subset))
}

/// Slack parameters for the structural cap events of a sparse support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventThresholds {
    /// Slack in the maximum-degree cap `(1+delta1) log n / log log n`.
    pub delta1: f64,
    /// Slack in the component-size cap
    /// `(2+delta2)/epsilon * log n / log log n`.
    pub delta2: f64,
    /// Edge-excess cap: every component must satisfy `|E| < |V| + delta3`.
    pub delta3: f64,
    /// Sparsification exponent entering the component-size cap.
    pub epsilon: f64,
}

/// Structural summary of a graph against the sparse-support cap events.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentDiagnostics {
    /// Vertex count of each connected component (singletons included),
    /// ordered by smallest contained vertex label.
    pub component_sizes: Vec<usize>,
    /// Largest vertex degree in the whole graph.
    pub max_degree: usize,
    /// Edge excess `|E| - |V| + 1` per component, aligned with
    /// `component_sizes`; zero exactly for trees.
    pub tree_excesses: Vec<usize>,
    /// Number of components containing at least one independent cycle.
    pub num_non_tree: usize,
    /// Max degree within `(1+delta1) log n / log log n`.
    pub degree_cap_holds: bool,
    /// Every component size within `(2+delta2)/epsilon * log n / log log n`.
    pub size_cap_holds: bool,
    /// Every component satisfies `|E| < |V| + delta3`.
    pub excess_cap_holds: bool,
    /// Every component is a tree.
    pub all_trees: bool,
    /// Fewer than `log n` components carry a cycle.
    pub few_cycles: bool,
}

/// Evaluates the structural cap events on a (sparse support) graph.
///
/// Requires `n >= 16` so that `log log n > 0` makes the caps meaningful.
/// The raw lists are returned alongside the flags, so every flag can be
/// recomputed from them: all-trees forces every excess to zero, and implies
/// few-cycles (`0 < log n`).
pub fn diagnostics(
    g: &WeightedGraph,
    thresholds: &EventThresholds,
) -> Result<ComponentDiagnostics, SamplerError> {
    let n = g.n();
    if n < 16 {
        return Err(SamplerError::SmallN { n });
    }
    for (name, value) in [
        ("delta1", thresholds.delta1),
        ("delta2", thresholds.delta2),
        ("delta3", thresholds.delta3),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(SamplerError::BadEventThreshold { name, value });
        }
    }
    let epsilon = thresholds.epsilon;
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon > 1.0 {
        return Err(SamplerError::BadEpsilon { epsilon });
    }
    let log_n = (n as f64).ln();
    let scale = log_n / log_n.ln();
    let components = connected_components(g);
    let mut component_sizes = Vec::with_capacity(components.len());
    let mut tree_excesses = Vec::with_capacity(components.len());
    for component in &components {
        component_sizes.push(component.graph.n());
        tree_excesses.push(tree_excess(&component.graph)?);
    }
    let num_non_tree = tree_excesses.iter().filter(|&&e| e > 0).count();
    let degree_cap = (1.0 + thresholds.delta1) * scale;
    let size_cap = (2.0 + thresholds.delta2) / epsilon * scale;
    let max_degree = max_degree(g);
    // |E| < |V| + delta3 in terms of the excess e = |E| - |V| + 1.
    let excess_cap_holds = tree_excesses.iter().all(|&e| (e as f64) < thresholds.delta3 + 1.0);
    Ok(ComponentDiagnostics {
        degree_cap_holds: (max_degree as f64) <= degree_cap,
        size_cap_holds: component_sizes.iter().all(|&s| (s as f64) <= size_cap),
        excess_cap_holds,
        all_trees: num_non_tree == 0,
        few_cycles: (num_non_tree as f64) < log_n,
        component_sizes,
        max_degree,
        tree_excesses,
        num_non_tree,
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn decompose_is_a_partition(seed in any::<u64>(), epsilon in 0.05f64..1.0) {
            let params = ModelParams::new(64, 4.0, seed).unwrap();
            let z = sample_network(&params, &mut child_rng(seed, 0));
            // epsilon * (1 + 0.4) <= 1.4 keeps every epsilon admissible.
            let plan = DecompositionPlan::new(64, 4.0, epsilon, 0.4).unwrap();
            let (heavy, light) = decompose(&z, &plan).unwrap();
            prop_assert_eq!(heavy.num_edges() + light.num_edges(), z.num_edges());
            let mut merged: Vec<(usize, usize, f64)> =
                heavy.edges().iter().chain(light.edges()).copied().collect();
            merged.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            prop_assert_eq!(merged, z.edges().to_vec());
        }

        #[test]
        fn truncated_support_always_respected(t in 0.0f64..4.0, seed in any::<u64>()) {
            let mut rng = child_rng(seed, 9);
            for _ in 0..40 {
                let v = sample_truncated_gaussian(t, &mut rng).unwrap();
                prop_assert!(v.abs() > t);
            }
        }

        #[test]
        fn planted_weights_always_reach_the_level(
            seed in any::<u64>(),
            k in 2usize..7,
            delta in 0.1f64..3.0,
        ) {
            let n = 40;
            let params = ModelParams::new(n, 2.0, seed).unwrap();
            let (g, subset) = plant_clique(&params, k, delta, &mut child_rng(seed, 3)).unwrap();
            prop_assert_eq!(subset.len(), k);
            let level = planting_level(n, k, delta);
            for a in 0..k {
                for b in (a + 1)..k {
                    let w = g
                        .neighbors(subset[a])
                        .iter()
                        .find(|&&(v, _)| v == subset[b])
                        .map(|&(_, w)| w);
                    prop_assert!(w.is_some());
                    prop_assert!(w.unwrap() >= level);
                }
            }
        }
    }
}
