//! Exact clique search. The clique number drives the spectral bound
//! `lambda_1^2 <= ((k - 1) / k) ||A||_F^2`, so it must be exact, never a
//! heuristic: branch-and-bound with a greedy-coloring upper bound finds one
//! maximum clique, and Bron-Kerbosch with pivoting enumerates maximal
//! cliques (used for uniqueness and containment statistics). Edges with
//! weight exactly zero count as absent.

use super::WeightedGraph;

/// Fixed-capacity bitset over vertex indices.
#[derive(Clone, PartialEq, Eq)]
pub(crate) struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub(crate) fn new(n: usize) -> Self {
        BitSet {
            words: vec![0; n.div_ceil(64).max(1)],
        }
    }

    pub(crate) fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub(crate) fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    fn and_not(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & !b)
                .collect(),
        }
    }

    fn intersects(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    fn and_count(&self, other: &BitSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let tz = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }
}

/// Neighborhood bitsets over nonzero-weight edges.
pub(crate) fn adjacency_bitsets(g: &WeightedGraph) -> Vec<BitSet> {
    let mut adj = vec![BitSet::new(g.n()); g.n()];
    for &(i, j, w) in g.edges() {
        if w != 0.0 {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    adj
}

/// Greedy coloring of the candidate set: vertices grouped into independent
/// classes, emitted class by class with the class index (1-based) as an
/// upper bound on any clique inside the remaining candidates.
fn color_sort(p: &BitSet, adj: &[BitSet], n: usize) -> Vec<(usize, usize)> {
    let mut class_bits: Vec<BitSet> = Vec::new();
    let mut class_members: Vec<Vec<usize>> = Vec::new();
    for v in p.iter() {
        let mut placed = false;
        for (bits, members) in class_bits.iter_mut().zip(&mut class_members) {
            if !adj[v].intersects(bits) {
                bits.insert(v);
                members.push(v);
                placed = true;
                break;
            }
        }
        if !placed {
            let mut bits = BitSet::new(n);
            bits.insert(v);
            class_bits.push(bits);
            class_members.push(vec![v]);
        }
    }
    let mut out = Vec::new();
    for (ci, members) in class_members.iter().enumerate() {
        for &v in members {
            out.push((v, ci + 1));
        }
    }
    out
}

fn expand(
    r: &mut Vec<usize>,
    p: &BitSet,
    adj: &[BitSet],
    n: usize,
    best: &mut (usize, Vec<usize>),
) {
    if p.is_empty() {
        if r.len() > best.0 {
            *best = (r.len(), r.clone());
        }
        return;
    }
    let order = color_sort(p, adj, n);
    let mut live = p.clone();
    for &(v, color) in order.iter().rev() {
        if r.len() + color <= best.0 {
            return;
        }
        r.push(v);
        expand(r, &live.and(&adj[v]), adj, n, best);
        r.pop();
        live.remove(v);
    }
}

/// Exact maximum clique size and one witness (ascending vertex list), by
/// branch-and-bound with the greedy-coloring bound. The empty graph reports
/// `(0, [])`; any nonempty graph has cliques of size 1.
pub fn clique_number(g: &WeightedGraph) -> (usize, Vec<usize>) {
    let n = g.n();
    if n == 0 {
        return (0, Vec::new());
    }
    let adj = adjacency_bitsets(g);
    let mut best = (1, vec![0]);
    let mut all = BitSet::new(n);
    for v in 0..n {
        all.insert(v);
    }
    let mut r = Vec::new();
    expand(&mut r, &all, &adj, n, &mut best);
    best.1.sort_unstable();
    best
}

fn bron_kerbosch(
    r: &mut Vec<usize>,
    p: &mut BitSet,
    x: &mut BitSet,
    adj: &[BitSet],
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() && x.is_empty() {
        let mut clique = r.clone();
        clique.sort_unstable();
        out.push(clique);
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .max_by_key(|&u| p.and_count(&adj[u]))
        .expect("p or x nonempty");
    let candidates: Vec<usize> = p.and_not(&adj[pivot]).iter().collect();
    for v in candidates {
        r.push(v);
        let mut np = p.and(&adj[v]);
        let mut nx = x.and(&adj[v]);
        bron_kerbosch(r, &mut np, &mut nx, adj, out);
        r.pop();
        p.remove(v);
        x.insert(v);
    }
}

/// All maximal cliques with at least `min_size` vertices, each ascending,
/// the list in lexicographic order.
pub fn maximal_cliques_min_size(g: &WeightedGraph, min_size: usize) -> Vec<Vec<usize>> {
    let n = g.n();
    if n == 0 {
        return Vec::new();
    }
    let adj = adjacency_bitsets(g);
    let mut p = BitSet::new(n);
    for v in 0..n {
        p.insert(v);
    }
    let mut x = BitSet::new(n);
    let mut out = Vec::new();
    bron_kerbosch(&mut Vec::new(), &mut p, &mut x, &adj, &mut out);
    out.retain(|c| c.len() >= min_size);
    out.sort();
    out
}

/// All cliques of exactly maximum size, via maximal-clique enumeration.
/// Independent of [`clique_number`]'s branch-and-bound, which makes the two
/// useful as cross-checks of each other.
pub fn all_maximum_cliques(g: &WeightedGraph) -> Vec<Vec<usize>> {
    let mut all = maximal_cliques_min_size(g, 1);
    let max = all.iter().map(|c| c.len()).max().unwrap_or(0);
    all.retain(|c| c.len() == max);
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_clique(k: usize) -> WeightedGraph {
        let mut edges = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                edges.push((i, j, 1.0));
            }
        }
        WeightedGraph::new(k, edges).unwrap()
    }

    #[test]
    fn complete_graph() {
        let (k, witness) = clique_number(&unit_clique(5));
        assert_eq!(k, 5);
        assert_eq!(witness, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn trees_have_clique_number_two() {
        let path = WeightedGraph::new(4, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(clique_number(&path).0, 2);
    }

    #[test]
    fn edgeless_and_empty() {
        assert_eq!(clique_number(&WeightedGraph::new(0, vec![]).unwrap()).0, 0);
        let (k, w) = clique_number(&WeightedGraph::new(3, vec![]).unwrap());
        assert_eq!((k, w), (1, vec![0]));
    }

    #[test]
    fn zero_weight_edges_are_absent() {
        let g = WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 0.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(clique_number(&g).0, 2);
    }

    #[test]
    fn petersen_graph_is_triangle_free() {
        // Outer 5-cycle, inner pentagram, spokes.
        let mut edges = Vec::new();
        for i in 0..5 {
            let j = (i + 1) % 5;
            edges.push((i.min(j), i.max(j), 1.0));
            edges.push((i, i + 5, 1.0));
        }
        for i in 0..5 {
            let j = 5 + (i + 2) % 5;
            let (a, b) = ((i + 5).min(j), (i + 5).max(j));
            edges.push((a, b, 1.0));
        }
        let g = WeightedGraph::new(10, edges).unwrap();
        assert_eq!(clique_number(&g).0, 2);
    }

    #[test]
    fn two_disjoint_maximum_cliques_both_found() {
        let mut edges = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                edges.push((i, j, 1.0));
                edges.push((i + 4, j + 4, 1.0));
            }
        }
        let g = WeightedGraph::new(8, edges).unwrap();
        assert_eq!(clique_number(&g).0, 4);
        let maxes = all_maximum_cliques(&g);
        assert_eq!(maxes, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
    }

    #[test]
    fn maximal_cliques_of_a_triangle_with_tail() {
        let g = WeightedGraph::new(
            4,
            vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (2, 3, 1.0)],
        )
        .unwrap();
        let cliques = maximal_cliques_min_size(&g, 1);
        assert_eq!(cliques, vec![vec![0, 1, 2], vec![2, 3]]);
        assert_eq!(all_maximum_cliques(&g), vec![vec![0, 1, 2]]);
    }
}
