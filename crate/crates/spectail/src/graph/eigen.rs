//! Largest-eigenvalue solvers: dense cyclic Jacobi for small connected
//! components, explicitly restarted Lanczos with full reorthogonalization
//! for large ones. The largest eigenvalue of the whole graph is the maximum
//! over its connected components (each component matrix has zero trace, so
//! its largest eigenvalue is nonnegative).

use super::{connected_components, frobenius_sq, GraphError, WeightedGraph};

/// Components up to this size are solved densely by Jacobi rotations.
const DENSE_CUTOFF: usize = 32;

/// Krylov basis size per Lanczos cycle.
const LANCZOS_BASIS: usize = 96;

/// Restart cap; each cycle rebuilds the basis from the best Ritz vector.
const LANCZOS_CYCLES: usize = 300;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generic start vector: fixed hash of the index, so runs and
/// thread counts cannot change it, and exact orthogonality to an eigenvector
/// never survives rounding.
fn hash_vector(n: usize, stream: u64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let bits = splitmix64(stream.wrapping_mul(0x100_0000).wrapping_add(i as u64));
            (bits >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let s = norm(a);
    if s > 0.0 {
        for x in a.iter_mut() {
            *x /= s;
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix (row-major,
/// `n x n`, destroyed in place). Returns eigenvalues and the eigenvector
/// matrix `v` (row-major; column `j` belongs to eigenvalue `j`).
fn jacobi_eigen(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob_sq: f64 = a.iter().map(|x| x * x).sum();
    let target = frob_sq * 1e-30;
    for _sweep in 0..100 {
        let mut off_sq = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off_sq <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e20 {
                    0.5 / theta
                } else if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    1.0 / (theta - (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[p * n + r] = a[r * n + p];
                    a[r * n + q] = s * arp + c * arq;
                    a[q * n + r] = a[r * n + q];
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| a[i * n + i]).collect();
    (eigenvalues, v)
}

/// Top eigenpair of a small component by dense Jacobi.
fn dense_top(g: &WeightedGraph) -> (f64, Vec<f64>) {
    let n = g.n();
    let mut a = vec![0.0; n * n];
    for &(i, j, w) in g.edges() {
        a[i * n + j] = w;
        a[j * n + i] = w;
    }
    let (eigenvalues, v) = jacobi_eigen(&mut a, n);
    let top = eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("component is nonempty");
    let mut vec: Vec<f64> = (0..n).map(|r| v[r * n + top]).collect();
    normalize(&mut vec);
    (eigenvalues[top], vec)
}

/// Number of eigenvalues of the symmetric tridiagonal `(alpha, beta)`
/// strictly below `x`, from the inertia of the Sturm recurrence
/// `d_{i+1} = alpha_{i+1} - x - beta_i^2 / d_i`.
fn sturm_count_below(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0usize;
    let mut d = alpha[0] - x;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..alpha.len() {
        if d == 0.0 {
            d = -1e-300;
        }
        d = alpha[i] - x - beta[i - 1] * beta[i - 1] / d;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T - theta I) x = rhs` in place for the symmetric tridiagonal
/// `T = (alpha, beta)` by Gaussian elimination with partial pivoting
/// (one fill-in superdiagonal). Near-zero pivots are perturbed; inverse
/// iteration only needs the solution's direction.
fn solve_shifted_tridiagonal(alpha: &[f64], beta: &[f64], theta: f64, rhs: &mut [f64]) {
    let m = alpha.len();
    let mut d: Vec<f64> = alpha.iter().map(|a| a - theta).collect();
    let mut du: Vec<f64> = beta.to_vec();
    let mut du2 = vec![0.0; m.saturating_sub(2)];
    let tiny = 1e-300;
    for i in 0..m.saturating_sub(1) {
        let sub = beta[i];
        if d[i].abs() >= sub.abs() {
            let pivot = if d[i] == 0.0 { tiny } else { d[i] };
            let fact = sub / pivot;
            d[i + 1] -= fact * du[i];
            rhs[i + 1] -= fact * rhs[i];
        } else {
            // Swap rows i and i+1; the swap drags row i+1's superdiagonal
            // into a second superdiagonal of row i.
            let fact = d[i] / sub;
            d[i] = sub;
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < m {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            rhs.swap(i, i + 1);
            rhs[i + 1] -= fact * rhs[i];
        }
    }
    if d[m - 1] == 0.0 {
        d[m - 1] = tiny;
    }
    rhs[m - 1] /= d[m - 1];
    if m >= 2 {
        let pivot = if d[m - 2] == 0.0 { tiny } else { d[m - 2] };
        rhs[m - 2] = (rhs[m - 2] - du[m - 2] * rhs[m - 1]) / pivot;
    }
    for i in (0..m.saturating_sub(2)).rev() {
        let pivot = if d[i] == 0.0 { tiny } else { d[i] };
        rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / pivot;
    }
}

/// Largest eigenpair of the symmetric tridiagonal `(alpha, beta)`: Sturm
/// bisection for the eigenvalue, inverse iteration for the eigenvector,
/// with a dense Jacobi fallback if the iteration degenerates. Cost is
/// `O(m)` per bisection step, so per-step Ritz checkpoints stay cheap.
fn tridiag_top(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    if m == 1 {
        return (alpha[0], vec![1.0]);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let radius = if i > 0 { beta[i - 1].abs() } else { 0.0 }
            + if i < m - 1 { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - radius);
        hi = hi.max(alpha[i] + radius);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    hi += 1e-12 * scale;
    for _ in 0..200 {
        if hi - lo <= 1e-15 * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sturm_count_below(alpha, beta, mid) == m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let mut s = vec![1.0 / (m as f64).sqrt(); m];
    for _ in 0..3 {
        solve_shifted_tridiagonal(alpha, beta, theta, &mut s);
        let len = norm(&s);
        if !len.is_finite() || len == 0.0 {
            break;
        }
        for x in s.iter_mut() {
            *x /= len;
        }
    }
    // Accept the inverse-iteration vector only if it reproduces the
    // eigenvalue; otherwise fall back to the dense solver.
    let mut ok = s.iter().all(|x| x.is_finite());
    if ok {
        let mut residual_sq = 0.0;
        for i in 0..m {
            let mut r = (alpha[i] - theta) * s[i];
            if i > 0 {
                r += beta[i - 1] * s[i - 1];
            }
            if i < m - 1 {
                r += beta[i] * s[i + 1];
            }
            residual_sq += r * r;
        }
        ok = residual_sq.sqrt() <= 1e-6 * scale;
    }
    if !ok {
        let mut t = vec![0.0; m * m];
        for (i, &a_i) in alpha.iter().enumerate() {
            t[i * m + i] = a_i;
        }
        for (i, &b_i) in beta.iter().enumerate().take(m - 1) {
            t[i * m + i + 1] = b_i;
            t[(i + 1) * m + i] = b_i;
        }
        let (ritz, v) = jacobi_eigen(&mut t, m);
        let top = ritz
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("tridiagonal is nonempty");
        return (ritz[top], (0..m).map(|r| v[r * m + top]).collect());
    }
    (theta, s)
}

/// Top eigenpair of a large sparse component by restarted Lanczos with full
/// two-pass reorthogonalization. After every step the current tridiagonal's
/// top Ritz pair is computed (cheaply, by Sturm bisection), and the classic
/// residual estimate `beta_j |s_j|` decides when to attempt the true
/// convergence test, so most solves stop well before the basis fills.
/// Convergence is always declared on the true residual
/// `||A y - theta y|| <= rel_tol * max(1, |theta|)`.
fn lanczos_top(g: &WeightedGraph, rel_tol: f64) -> Result<(f64, Vec<f64>), GraphError> {
    let n = g.n();
    let m_max = n.min(LANCZOS_BASIS);
    let scale = frobenius_sq(g).sqrt().max(1e-300);
    let mut q = hash_vector(n, 1);
    normalize(&mut q);
    let mut w = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut last_residual = f64::INFINITY;
    for cycle in 0..LANCZOS_CYCLES {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
        basis.push(q.clone());
        let mut alpha: Vec<f64> = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        // After a failed true-residual test, skip checkpoints for a few
        // steps; the estimate moves slowly and reassembly is the only
        // nontrivial cost left.
        let mut cooldown = 0usize;
        let mut restart = q.clone();
        for j in 0..m_max {
            g.matvec(&basis[j], &mut w);
            if j > 0 {
                let b = beta[j - 1];
                axpy(-b, &basis[j - 1], &mut w);
            }
            let a_j = dot(&basis[j], &w);
            alpha.push(a_j);
            axpy(-a_j, &basis[j], &mut w);
            // Full reorthogonalization, two passes, keeps the basis
            // orthonormal to machine precision over long cycles.
            for _ in 0..2 {
                for u in &basis {
                    let c = dot(u, &w);
                    if c != 0.0 {
                        axpy(-c, u, &mut w);
                    }
                }
            }
            let b_j = norm(&w);
            let full = j + 1 == m_max;
            let invariant = b_j <= 1e-13 * scale;
            if cooldown > 0 {
                cooldown -= 1;
            }
            if cooldown == 0 || full || invariant {
                let (theta, s) = tridiag_top(&alpha, &beta);
                let estimate = b_j * s[j].abs();
                if estimate <= 0.5 * rel_tol * theta.abs().max(1.0) || full || invariant {
                    let mut y = vec![0.0; n];
                    for (i, u) in basis.iter().enumerate() {
                        axpy(s[i], u, &mut y);
                    }
                    normalize(&mut y);
                    g.matvec(&y, &mut r);
                    axpy(-theta, &y, &mut r);
                    last_residual = norm(&r);
                    if last_residual <= rel_tol * theta.abs().max(1.0) {
                        return Ok((theta, y));
                    }
                    restart = y;
                    cooldown = 4;
                }
            }
            if full {
                break;
            }
            if !invariant {
                beta.push(b_j);
                let mut next = w.clone();
                for x in next.iter_mut() {
                    *x /= b_j;
                }
                basis.push(next);
            } else {
                // Krylov space went invariant before filling the basis:
                // continue in a fresh direction (beta = 0 keeps the
                // tridiagonal relation exact, in block form).
                let mut injected = false;
                for attempt in 0..3u64 {
                    let mut f =
                        hash_vector(n, 2 + attempt + 8 * (j as u64 + 1) * (cycle as u64 + 1));
                    for _ in 0..2 {
                        for u in &basis {
                            let c = dot(u, &f);
                            axpy(-c, u, &mut f);
                        }
                    }
                    if norm(&f) > 1e-8 {
                        normalize(&mut f);
                        beta.push(0.0);
                        basis.push(f);
                        injected = true;
                        break;
                    }
                }
                if !injected {
                    break;
                }
            }
        }
        q = restart;
    }
    Err(GraphError::NoConvergence {
        residual: last_residual,
        iterations: LANCZOS_CYCLES,
    })
}

/// Largest eigenvalue of the implied symmetric matrix and an associated
/// unit eigenvector (full length `n`; the sign is fixed so the largest-
/// magnitude coordinate is positive).
///
/// Solves per connected component (dense Jacobi up to 32 vertices, restarted
/// Lanczos above) and takes the maximum. `rel_tol` must lie in `(0, 1e-3]`
/// and bounds the residual: `||A v - lambda v|| <= rel_tol * max(1,
/// |lambda|)`.
pub fn largest_eigenvalue(
    g: &WeightedGraph,
    rel_tol: f64,
) -> Result<(f64, Vec<f64>), GraphError> {
    if g.n() == 0 {
        return Err(GraphError::EmptyGraph);
    }
    if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
        return Err(GraphError::BadTolerance { rel_tol });
    }
    let comps = connected_components(g);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for (ci, comp) in comps.iter().enumerate() {
        let (lambda, local) = if comp.graph.n() == 1 {
            (0.0, vec![1.0])
        } else if comp.graph.n() <= DENSE_CUTOFF {
            dense_top(&comp.graph)
        } else {
            lanczos_top(&comp.graph, rel_tol)?
        };
        if best.as_ref().is_none_or(|(b, _, _)| lambda > *b) {
            best = Some((lambda, ci, local));
        }
    }
    let (lambda, ci, local) = best.expect("nonempty graph has components");
    let mut v = vec![0.0; g.n()];
    for (loc, &orig) in comps[ci].vertices.iter().enumerate() {
        v[orig] = local[loc];
    }
    // Deterministic sign: flip so the largest-magnitude coordinate is
    // positive (first such index on exact ties).
    let lead = (0..v.len())
        .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .expect("nonempty vector");
    if v[lead] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    let mut check = vec![0.0; g.n()];
    g.matvec(&v, &mut check);
    axpy(-lambda, &v, &mut check);
    debug_assert!(
        norm(&check) <= rel_tol * lambda.abs().max(1.0) * 4.0,
        "assembled eigenpair residual {} exceeds tolerance",
        norm(&check)
    );
    Ok((lambda, v))
}
