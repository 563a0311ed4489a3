//! Reference oracles and numeric comparison helpers.
//!
//! Everything here recomputes results along an independent route (edge
//! deletion instead of Kruskal, path sums instead of the two-pass filter,
//! finite differences instead of analytic gradients). The implementations
//! under test never call into this module.

use num_traits::Float;

use crate::treefilter::{GridGraph, SpanningTree};

/// Mixed absolute/relative error: `|a - b| / max(1, |b|)`.
pub fn rel_err<T: Float>(a: T, b: T) -> T {
    (a - b).abs() / T::one().max(b.abs())
}

/// Largest elementwise [`rel_err`] across two slices.
pub fn max_rel_err<T: Float>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (&x, &y)| m.max(rel_err(x, y)))
}

/// MST total weight by reverse deletion: walk edges from the heaviest down,
/// removing each one whose removal keeps the graph connected.
pub fn reverse_delete_total_weight<T: Float>(g: &GridGraph<T>) -> T {
    let n = g.vertex_count();
    let mut alive = vec![true; g.edges.len()];
    let mut idx: Vec<usize> = (0..g.edges.len()).collect();
    idx.sort_by(|&a, &b| {
        g.edges[b]
            .weight
            .partial_cmp(&g.edges[a].weight)
            .expect("finite weights")
            .then(b.cmp(&a))
    });

    let connected = |alive: &[bool]| -> bool {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, e) in g.edges.iter().enumerate() {
            if alive[i] {
                adj[e.u as usize].push(e.v);
                adj[e.v as usize].push(e.u);
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &nbr in &adj[v as usize] {
                if !seen[nbr as usize] {
                    seen[nbr as usize] = true;
                    count += 1;
                    stack.push(nbr);
                }
            }
        }
        count == n
    };

    let mut kept = g.edges.len();
    for &i in &idx {
        if kept == n - 1 {
            break;
        }
        alive[i] = false;
        if connected(&alive) {
            kept -= 1;
        } else {
            alive[i] = true;
        }
    }
    g.edges
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .fold(T::zero(), |acc, (e, _)| acc + e.weight)
}

/// Tree path-length from `src` to every vertex by breadth-first traversal of
/// the tree's adjacency (an independent route around `SpanningTree::distance`).
pub fn tree_distances_from<T: Float>(t: &SpanningTree<T>, src: u32) -> Vec<T> {
    let n = t.vertex_count();
    let mut adj: Vec<Vec<(u32, T)>> = vec![Vec::new(); n];
    for v in 0..n as u32 {
        if v != t.root {
            let p = t.parent[v as usize];
            let w = t.parent_weight[v as usize];
            adj[v as usize].push((p, w));
            adj[p as usize].push((v, w));
        }
    }
    let mut dist = vec![T::nan(); n];
    dist[src as usize] = T::zero();
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        for &(nbr, w) in &adj[v as usize] {
            if dist[nbr as usize].is_nan() {
                dist[nbr as usize] = dist[v as usize] + w;
                queue.push_back(nbr);
            }
        }
    }
    dist
}

/// Dense affinity matrix `A[i][j] = exp(-D(i, j))` via per-source path sums.
pub fn dense_affinity_matrix<T: Float>(t: &SpanningTree<T>) -> Vec<Vec<T>> {
    let n = t.vertex_count();
    (0..n as u32)
        .map(|i| {
            tree_distances_from(t, i)
                .into_iter()
                .map(|d| (-d).exp())
                .collect()
        })
        .collect()
}

/// Central finite difference `(f(x + h) - f(x - h)) / 2h`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Checks every coordinate of an analytic gradient against central finite
/// differences of `loss`. `loss` receives a full parameter vector. Returns
/// the largest relative error encountered.
pub fn gradient_check<F>(loss: F, x: &[f64], grad: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x.len(), grad.len());
    let mut worst = 0.0f64;
    let mut buf = x.to_vec();
    for i in 0..x.len() {
        let orig = buf[i];
        buf[i] = orig + h;
        let up = loss(&buf);
        buf[i] = orig - h;
        let down = loss(&buf);
        buf[i] = orig;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max(rel_err(grad[i], fd));
    }
    worst
}
