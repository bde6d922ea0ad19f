//! Weighted networks and the deterministic spectral theory used throughout
//! the laboratory: the largest eigenvalue, the Frobenius norm, exact clique
//! search, a clique-anchored quadratic-program optimizer, and the
//! clique/tree bounds that control extreme eigenvalues:
//!
//! ```text
//! lambda_1(A)^2 <= ((k - 1) / k) * ||A||_F^2        (k = clique number)
//! sum_{i~j, tree} v_i v_j <= s^2/4  or  eta (s - eta)
//! ```
//!
//! A [`WeightedGraph`] is an undirected simple graph on `n` vertices whose
//! edges carry real conductances; the implied adjacency matrix is symmetric
//! with zero diagonal.

mod clique;
mod eigen;
mod motzkin;

pub use clique::{all_maximum_cliques, clique_number, maximal_cliques_min_size};
pub use eigen::largest_eigenvalue;
pub use motzkin::{motzkin_straus_optimize, MotzkinStraus};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors for graph construction, serialization, and the spectral and
/// combinatorial operations.
#[derive(Debug, Error)]
pub enum GraphError {
    /// Edge endpoint at or beyond the vertex count.
    #[error("edge ({i}, {j}) out of range for {n} vertices")]
    VertexOutOfRange {
        /// Lower endpoint.
        i: usize,
        /// Upper endpoint.
        j: usize,
        /// Vertex count of the graph.
        n: usize,
    },
    /// Self-loop or wrongly ordered endpoints.
    #[error("edge endpoints must satisfy i < j, got ({i}, {j})")]
    BadEndpoints {
        /// First endpoint.
        i: usize,
        /// Second endpoint.
        j: usize,
    },
    /// The same unordered pair listed twice.
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge {
        /// Lower endpoint.
        i: usize,
        /// Upper endpoint.
        j: usize,
    },
    /// NaN or infinite conductance.
    #[error("non-finite weight on edge ({i}, {j})")]
    NonFiniteWeight {
        /// Lower endpoint.
        i: usize,
        /// Upper endpoint.
        j: usize,
    },
    /// Operation requires at least one vertex.
    #[error("operation requires a nonempty graph")]
    EmptyGraph,
    /// Operation requires at least one edge.
    #[error("operation requires a graph with at least one edge")]
    NoEdges,
    /// Relative tolerance outside (0, 1e-3].
    #[error("relative tolerance must lie in (0, 1e-3], got {rel_tol}")]
    BadTolerance {
        /// Offending value.
        rel_tol: f64,
    },
    /// Iterative eigensolver hit its iteration cap.
    #[error("eigensolver did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence {
        /// Residual at the point of giving up.
        residual: f64,
        /// Iterations spent.
        iterations: usize,
    },
    /// Input to a tree-only operation is cyclic or disconnected.
    #[error("input graph is not a tree: {reason}")]
    NotATree {
        /// What failed: "cyclic" or "disconnected".
        reason: &'static str,
    },
    /// Input to a connected-only operation has several components.
    #[error("input graph is disconnected")]
    Disconnected,
    /// Vector argument of the wrong length.
    #[error("expected a vector of length {expected}, got {got}")]
    LengthMismatch {
        /// Required length.
        expected: usize,
        /// Provided length.
        got: usize,
    },
    /// A value argument escaped its required range.
    #[error("value at index {index} outside [0, {cap}]")]
    ValueOutOfRange {
        /// Offending position.
        index: usize,
        /// Upper cap the value must respect.
        cap: f64,
    },
    /// A proven inequality failed numerically; indicates a bug, not bad input.
    #[error("internal consistency violated: {what}")]
    Inconsistency {
        /// Description of the violated identity.
        what: String,
    },
    /// Malformed text serialization.
    #[error("parse error on line {line}: {msg}")]
    Parse {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        msg: String,
    },
    /// Malformed JSON serialization.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Undirected simple graph with real edge conductances. Immutable after
/// construction; the implied matrix `A` has `A[i][j] = A[j][i] = w` for each
/// stored edge `(i, j, w)` and zero diagonal.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    m: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    /// Build a graph from an edge list, validating simplicity. Edges are
    /// stored sorted by endpoints, so equal graphs serialize identically.
    pub fn new(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Result<Self, GraphError> {
        for &(i, j, w) in &edges {
            if i >= j {
                return Err(GraphError::BadEndpoints { i, j });
            }
            if j >= n {
                return Err(GraphError::VertexOutOfRange { i, j, n });
            }
            if !w.is_finite() {
                return Err(GraphError::NonFiniteWeight { i, j });
            }
        }
        edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for pair in edges.windows(2) {
            if (pair[0].0, pair[0].1) == (pair[1].0, pair[1].1) {
                return Err(GraphError::DuplicateEdge {
                    i: pair[0].0,
                    j: pair[0].1,
                });
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(i, j, w) in &edges {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        Ok(WeightedGraph { n, edges, adj })
    }

    /// Vertex count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Edge count.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j, weight)` with `i < j`, sorted by endpoints.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Neighbors of `i` with the connecting weights.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    /// Degree of vertex `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Matrix-vector product `y = A x` of the implied symmetric matrix.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for &(i, j, w) in &self.edges {
            y[i] += w * x[j];
            y[j] += w * x[i];
        }
    }

    /// Text serialization: header line `n m`, then one `i j weight` line per
    /// edge. Weights print in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for &(i, j, w) in &self.edges {
            out.push_str(&format!("{i} {j} {w}\n"));
        }
        out
    }

    /// Parse the text serialization produced by [`Self::to_text`].
    pub fn from_text(s: &str) -> Result<Self, GraphError> {
        let mut lines = s
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (line_no, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header line".into(),
        })?;
        let mut fields = header.split_whitespace();
        let parse_usize = |tok: Option<&str>, line: usize, what: &str| -> Result<usize, GraphError> {
            tok.ok_or(GraphError::Parse {
                line,
                msg: format!("missing {what}"),
            })?
            .parse()
            .map_err(|e| GraphError::Parse {
                line,
                msg: format!("bad {what}: {e}"),
            })
        };
        let n = parse_usize(fields.next(), line_no + 1, "vertex count")?;
        let m = parse_usize(fields.next(), line_no + 1, "edge count")?;
        let mut edges = Vec::with_capacity(m);
        for (idx, line) in lines {
            let mut f = line.split_whitespace();
            let i = parse_usize(f.next(), idx + 1, "edge endpoint")?;
            let j = parse_usize(f.next(), idx + 1, "edge endpoint")?;
            let w: f64 = f
                .next()
                .ok_or(GraphError::Parse {
                    line: idx + 1,
                    msg: "missing weight".into(),
                })?
                .parse()
                .map_err(|e| GraphError::Parse {
                    line: idx + 1,
                    msg: format!("bad weight: {e}"),
                })?;
            edges.push((i, j, w));
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: line_no + 1,
                msg: format!("header promises {m} edges, found {}", edges.len()),
            });
        }
        Self::new(n, edges)
    }

    /// JSON serialization with fields `n`, `m`, `edges`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphRepr {
            n: self.n,
            m: self.edges.len(),
            edges: self.edges.clone(),
        })
        .expect("graph serialization cannot fail")
    }

    /// Parse the JSON serialization produced by [`Self::to_json`].
    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        let repr: GraphRepr = serde_json::from_str(s)?;
        if repr.edges.len() != repr.m {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("m = {} but {} edges listed", repr.m, repr.edges.len()),
            });
        }
        Self::new(repr.n, repr.edges)
    }
}

/// Union-find with path compression and union by size.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn unite(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// One connected component: the induced subgraph reindexed to `0..size`,
/// plus the original vertex labels (`vertices[local] = original`).
#[derive(Debug, Clone)]
pub struct Component {
    /// Original labels, ascending; position is the local index.
    pub vertices: Vec<usize>,
    /// Induced subgraph on local indices.
    pub graph: WeightedGraph,
}

/// Split a graph into connected components (isolated vertices included),
/// ordered by smallest original label.
pub fn connected_components(g: &WeightedGraph) -> Vec<Component> {
    let n = g.n();
    let mut uf = UnionFind::new(n);
    for &(i, j, _) in g.edges() {
        uf.unite(i, j);
    }
    // Group vertices by root, keeping ascending label order within and
    // across components.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        let r = uf.find(v);
        members[r].push(v);
    }
    let mut local = vec![0usize; n];
    let mut out = Vec::new();
    for root in 0..n {
        if members[root].is_empty() {
            continue;
        }
        let vertices = std::mem::take(&mut members[root]);
        for (idx, &v) in vertices.iter().enumerate() {
            local[v] = idx;
        }
        let edges: Vec<(usize, usize, f64)> = g
            .edges()
            .iter()
            .filter(|&&(i, _, _)| uf.find(i) == root)
            .map(|&(i, j, w)| (local[i], local[j], w))
            .collect();
        let graph = WeightedGraph::new(vertices.len(), edges)
            .expect("induced subgraph of a valid graph is valid");
        out.push(Component { vertices, graph });
    }
    out.sort_by_key(|c| c.vertices[0]);
    out
}

/// Cycle rank `|E| - |V| + 1` of a connected graph; zero exactly for trees.
pub fn tree_excess(c: &WeightedGraph) -> Result<usize, GraphError> {
    if c.n() == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let mut uf = UnionFind::new(c.n());
    for &(i, j, _) in c.edges() {
        uf.unite(i, j);
    }
    let root = uf.find(0);
    if (1..c.n()).any(|v| uf.find(v) != root) {
        return Err(GraphError::Disconnected);
    }
    Ok(c.num_edges() + 1 - c.n())
}

/// Largest vertex degree; zero for edgeless graphs.
pub fn max_degree(g: &WeightedGraph) -> usize {
    (0..g.n()).map(|i| g.degree(i)).max().unwrap_or(0)
}

/// Squared Frobenius norm of the implied symmetric matrix:
/// `2 * sum_{i<j} a_ij^2` (both triangles counted).
pub fn frobenius_sq(g: &WeightedGraph) -> f64 {
    2.0 * g.edges().iter().map(|&(_, _, w)| w * w).sum::<f64>()
}

/// Quadratic-form bound along a tree: for vertex values `0 <= v_i <= eta`
/// with sum `s`,
///
/// ```text
/// sum_{i~j} v_i v_j <= s^2 / 4        if s <  2 eta,
///                      eta (s - eta)  if s >= 2 eta.
/// ```
///
/// Returns `(lhs, rhs)`; the inequality is re-verified and a violation
/// reports an internal-consistency error (it is a theorem, so a failure
/// means a bug). Rejects cyclic or disconnected input.
pub fn tree_product_bound(
    tree: &WeightedGraph,
    values: &[f64],
    eta: f64,
) -> Result<(f64, f64), GraphError> {
    if tree.n() == 0 {
        return Err(GraphError::EmptyGraph);
    }
    match tree_excess(tree) {
        Ok(0) => {}
        Ok(_) => return Err(GraphError::NotATree { reason: "cyclic" }),
        Err(GraphError::Disconnected) => {
            return Err(GraphError::NotATree {
                reason: "disconnected",
            })
        }
        Err(e) => return Err(e),
    }
    if values.len() != tree.n() {
        return Err(GraphError::LengthMismatch {
            expected: tree.n(),
            got: values.len(),
        });
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(GraphError::ValueOutOfRange {
            index: usize::MAX,
            cap: eta,
        });
    }
    for (index, &v) in values.iter().enumerate() {
        if !(0.0..=eta).contains(&v) || !v.is_finite() {
            return Err(GraphError::ValueOutOfRange { index, cap: eta });
        }
    }
    let lhs: f64 = tree
        .edges()
        .iter()
        .map(|&(i, j, _)| values[i] * values[j])
        .sum();
    let s: f64 = values.iter().sum();
    let rhs = if s < 2.0 * eta {
        s * s / 4.0
    } else {
        eta * (s - eta)
    };
    if lhs > rhs + 1e-12 {
        return Err(GraphError::Inconsistency {
            what: format!("tree product bound violated: lhs {lhs} > rhs {rhs}"),
        });
    }
    Ok((lhs, rhs))
}

/// Spectral facts about one graph: the largest eigenvalue with its
/// eigenvector, the Frobenius norm, and the exact clique number with a
/// witness.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    /// Largest eigenvalue of the implied symmetric matrix.
    pub lambda1: f64,
    /// Squared Frobenius norm.
    pub frob_sq: f64,
    /// Exact maximum clique size (nonzero-weight edges only).
    pub clique_number: usize,
    /// One maximum clique, ascending.
    pub clique_vertices: Vec<usize>,
    /// Unit eigenvector for `lambda1`, full length `n`.
    pub top_eigenvector: Vec<f64>,
}

/// Compute a [`SpectralSummary`]. `rel_tol` controls the eigensolver
/// residual, `||A v - lambda v|| <= rel_tol * max(1, |lambda|)`.
pub fn summarize(g: &WeightedGraph, rel_tol: f64) -> Result<SpectralSummary, GraphError> {
    let (lambda1, v) = largest_eigenvalue(g, rel_tol)?;
    let frob_sq = frobenius_sq(g);
    let (k, clique_vertices) = clique_number(g);
    if k >= 2 {
        let cap = (k as f64 - 1.0) / k as f64 * frob_sq;
        debug_assert!(
            lambda1 * lambda1 <= cap + 1e-9 * frob_sq,
            "clique spectral bound violated: {lambda1}^2 > {cap}"
        );
    }
    Ok(SpectralSummary {
        lambda1,
        frob_sq,
        clique_number: k,
        clique_vertices,
        top_eigenvector: v,
    })
}

/// Slack in the clique spectral bound:
/// `((k - 1) / k) ||A||_F^2 - lambda_1^2`, which is nonnegative up to
/// `1e-9 * ||A||_F^2` of eigensolver noise, and zero for cliques with
/// constant-magnitude weights. Defined as 0 for graphs with clique number
/// below 2 (then `lambda_1 = 0` too).
pub fn spectral_bound_gap(g: &WeightedGraph) -> Result<f64, GraphError> {
    let (k, _) = clique_number(g);
    if k < 2 {
        return Ok(0.0);
    }
    let (lambda1, _) = largest_eigenvalue(g, 1e-10)?;
    Ok((k as f64 - 1.0) / k as f64 * frobenius_sq(g) - lambda1 * lambda1)
}
