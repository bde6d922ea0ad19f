//! Clique-number quadratic program over the probability simplex:
//!
//! ```text
//! max { sum_{i<j, i~j} f_i f_j : f_i >= 0, sum f_i = 1 } = (k - 1) / (2k),
//! ```
//!
//! with `k` the clique number (edge presence only; weights play no role
//! beyond zero/nonzero). The optimum is witnessed by the uniform vector on a
//! maximum clique. The constructive mass-transport argument behind the
//! identity also runs here as a verification trace: repeatedly take a
//! non-adjacent pair with positive mass and push all mass from the vertex
//! with the smaller neighborhood sum into the other (the objective never
//! decreases), until the support is a clique, then flatten. From a generic
//! start the transport may stall on a smaller clique than the maximum, so
//! the returned optimum is anchored to exact clique search and the
//! transport's terminal value is reported alongside; the trace exceeding the
//! clique optimum is impossible and reported as an internal-consistency
//! error.

use super::clique::{adjacency_bitsets, clique_number};
use super::{GraphError, WeightedGraph};

/// Result of the simplex quadratic program plus its verification trace.
#[derive(Debug, Clone)]
pub struct MotzkinStraus {
    /// The maximum `(k - 1) / (2k)`, `k` from exact clique search.
    pub value: f64,
    /// Optimal simplex vector: uniform on one maximum clique, length `n`.
    pub weights: Vec<f64>,
    /// Value the mass transport reached: `(m - 1) / (2m)` for the terminal
    /// clique size `m <= k`.
    pub transport_value: f64,
    /// Terminal support of the transport, ascending.
    pub transport_support: Vec<usize>,
    /// Objective after the initial state, each transport move, and the final
    /// flattening; nondecreasing throughout.
    pub objective_trace: Vec<f64>,
}

/// Solve the simplex quadratic program for the edge-presence graph of `g`.
/// Requires at least one nonzero-weight edge.
pub fn motzkin_straus_optimize(g: &WeightedGraph) -> Result<MotzkinStraus, GraphError> {
    let n = g.n();
    let adj = adjacency_bitsets(g);
    let support_edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|&&(_, _, w)| w != 0.0)
        .map(|&(i, j, _)| (i, j))
        .collect();
    if support_edges.is_empty() {
        return Err(GraphError::NoEdges);
    }
    let (k, clique) = clique_number(g);
    let value = (k as f64 - 1.0) / (2.0 * k as f64);
    let mut weights = vec![0.0; n];
    for &v in &clique {
        weights[v] = 1.0 / k as f64;
    }

    let objective = |f: &[f64]| -> f64 { support_edges.iter().map(|&(i, j)| f[i] * f[j]).sum() };

    let mut f = vec![1.0 / n as f64; n];
    let mut alive = vec![true; n];
    let mut trace = vec![objective(&f)];
    loop {
        // First non-adjacent live pair in lexicographic order.
        let mut pair = None;
        'scan: for u in 0..n {
            if !alive[u] {
                continue;
            }
            for v in (u + 1)..n {
                if alive[v] && !adj[u].contains(v) {
                    pair = Some((u, v));
                    break 'scan;
                }
            }
        }
        let Some((u, v)) = pair else { break };
        let nsum = |w: usize| -> f64 { adj[w].iter().map(|x| f[x]).sum() };
        let (su, sv) = (nsum(u), nsum(v));
        // Mass moves into the better-connected vertex; exact ties go into
        // the lower index.
        let (recv, donor) = if su >= sv { (u, v) } else { (v, u) };
        f[recv] += f[donor];
        f[donor] = 0.0;
        alive[donor] = false;
        trace.push(objective(&f));
    }
    let transport_support: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let m = transport_support.len();
    debug_assert!(transport_support
        .iter()
        .all(|&u| transport_support.iter().all(|&v| v == u || adj[u].contains(v))));
    // Within a clique the objective is (1 - sum f_i^2) / 2, maximized by the
    // uniform vector; flattening is the transport's final (monotone) step.
    for &v in &transport_support {
        f[v] = 1.0 / m as f64;
    }
    trace.push(objective(&f));
    let transport_value = (m as f64 - 1.0) / (2.0 * m as f64);

    for pair in trace.windows(2) {
        if pair[1] < pair[0] - 1e-12 {
            return Err(GraphError::Inconsistency {
                what: format!(
                    "transport objective decreased: {} -> {}",
                    pair[0], pair[1]
                ),
            });
        }
    }
    if transport_value > value + 1e-12 {
        return Err(GraphError::Inconsistency {
            what: format!(
                "transport reached {transport_value} above the clique optimum {value}"
            ),
        });
    }
    Ok(MotzkinStraus {
        value,
        weights,
        transport_value,
        transport_support,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_reaches_one_third() {
        let g = WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let r = motzkin_straus_optimize(&g).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.weights, vec![1.0 / 3.0; 3]);
        assert!((r.transport_value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_edge_reaches_one_quarter() {
        let g = WeightedGraph::new(2, vec![(0, 1, 2.5)]).unwrap();
        let r = motzkin_straus_optimize(&g).unwrap();
        assert_eq!(r.value, 0.25);
        assert_eq!(r.weights, vec![0.5, 0.5]);
        assert_eq!(r.transport_value, 0.25);
    }

    #[test]
    fn simplex_weights_sum_to_one() {
        let g = WeightedGraph::new(
            5,
            vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0)],
        )
        .unwrap();
        let r = motzkin_straus_optimize(&g).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_graphs_without_support() {
        let g = WeightedGraph::new(3, vec![(0, 1, 0.0)]).unwrap();
        assert!(matches!(
            motzkin_straus_optimize(&g),
            Err(GraphError::NoEdges)
        ));
    }

    #[test]
    fn transport_may_stall_below_the_optimum() {
        // Complete bipartite 3+3 next to a disjoint triangle: from the
        // uniform start the transport drains the triangle into the bipartite
        // side and terminates on a single edge, value 1/4, while the true
        // optimum is 1/3. The anchored value stays exact and the trace stays
        // monotone.
        let mut edges = Vec::new();
        for i in 0..3 {
            for j in 3..6 {
                edges.push((i, j, 1.0));
            }
        }
        edges.push((6, 7, 1.0));
        edges.push((7, 8, 1.0));
        edges.push((6, 8, 1.0));
        let g = WeightedGraph::new(9, edges).unwrap();
        let r = motzkin_straus_optimize(&g).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.transport_value, 0.25);
        assert_eq!(r.transport_support, vec![0, 3]);
        for pair in r.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-15);
        }
    }

    #[test]
    fn transport_trace_is_monotone_on_a_path() {
        let g = WeightedGraph::new(4, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let r = motzkin_straus_optimize(&g).unwrap();
        assert_eq!(r.value, 0.25);
        for pair in r.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-15);
        }
    }
}
