//! Minimum spanning tree over the grid graph.
//!
//! Kruskal with union-find; ties broken by the canonical edge index, so the
//! tree is deterministic even when many weights are equal.

use num_traits::Float;

use crate::error::{Error, Result};

use super::graph::GridGraph;

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            // path halving
            self.parent[x as usize] = self.parent[self.parent[x as usize] as usize];
            x = self.parent[x as usize];
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
        true
    }
}

/// Rooted spanning tree with parent references and a root-first traversal
/// order (parents always precede children).
#[derive(Clone, Debug)]
pub struct SpanningTree<T> {
    pub height: usize,
    pub width: usize,
    pub root: u32,
    /// Per-vertex parent; the root is self-parented.
    pub parent: Vec<u32>,
    /// Weight of the edge to the parent; zero at the root.
    pub parent_weight: Vec<T>,
    /// BFS order from the root, containing every vertex.
    pub order: Vec<u32>,
    /// Hop depth from the root; used for path queries.
    pub depth: Vec<u32>,
}

impl<T: Float> SpanningTree<T> {
    pub fn vertex_count(&self) -> usize {
        self.height * self.width
    }

    /// Total weight of all tree edges.
    pub fn total_weight(&self) -> T {
        self.parent_weight
            .iter()
            .fold(T::zero(), |acc, &w| acc + w)
    }

    /// Sum of dissimilarities along the unique tree path between `i` and
    /// `j`; symmetric, zero when `i == j`.
    pub fn distance(&self, i: u32, j: u32) -> Result<T> {
        let n = self.vertex_count() as u32;
        for v in [i, j] {
            if v >= n {
                return Err(Error::VertexOutOfRange {
                    vertex: v,
                    height: self.height,
                    width: self.width,
                });
            }
        }
        let (mut a, mut b) = (i, j);
        let mut dist = T::zero();
        while self.depth[a as usize] > self.depth[b as usize] {
            dist = dist + self.parent_weight[a as usize];
            a = self.parent[a as usize];
        }
        while self.depth[b as usize] > self.depth[a as usize] {
            dist = dist + self.parent_weight[b as usize];
            b = self.parent[b as usize];
        }
        while a != b {
            dist = dist + self.parent_weight[a as usize] + self.parent_weight[b as usize];
            a = self.parent[a as usize];
            b = self.parent[b as usize];
        }
        Ok(dist)
    }
}

/// Builds the minimum spanning tree rooted at vertex 0.
pub fn build_mst<T: Float>(g: &GridGraph<T>) -> SpanningTree<T> {
    build_mst_rooted(g, 0)
}

/// Builds the minimum spanning tree rooted at `root`. The edge set does not
/// depend on the root; only the parent orientation does.
pub fn build_mst_rooted<T: Float>(g: &GridGraph<T>, root: u32) -> SpanningTree<T> {
    let n = g.vertex_count();
    assert!((root as usize) < n, "root out of range");

    let mut idx: Vec<u32> = (0..g.edges.len() as u32).collect();
    // stable sort keeps canonical index order among equal weights
    idx.sort_by(|&a, &b| {
        g.edges[a as usize]
            .weight
            .partial_cmp(&g.edges[b as usize].weight)
            .expect("finite edge weights")
    });

    let mut uf = UnionFind::new(n);
    let mut chosen = Vec::with_capacity(n - 1);
    for &e in &idx {
        let edge = &g.edges[e as usize];
        if uf.union(edge.u, edge.v) {
            chosen.push((edge.u, edge.v, edge.weight));
            if chosen.len() == n - 1 {
                break;
            }
        }
    }
    debug_assert_eq!(chosen.len(), n - 1, "grid graph must be connected");

    // canonical edge order makes adjacency lists ascend by neighbor index
    chosen.sort_by_key(|&(u, v, _)| (u, v));
    let mut adj: Vec<Vec<(u32, T)>> = vec![Vec::new(); n];
    for &(u, v, w) in &chosen {
        adj[u as usize].push((v, w));
        adj[v as usize].push((u, w));
    }

    let mut parent = vec![u32::MAX; n];
    let mut parent_weight = vec![T::zero(); n];
    let mut depth = vec![0u32; n];
    let mut order = Vec::with_capacity(n);
    parent[root as usize] = root;
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &(nbr, w) in &adj[v as usize] {
            if parent[nbr as usize] == u32::MAX {
                parent[nbr as usize] = v;
                parent_weight[nbr as usize] = w;
                depth[nbr as usize] = depth[v as usize] + 1;
                order.push(nbr);
            }
        }
    }
    debug_assert_eq!(order.len(), n);

    SpanningTree {
        height: g.height,
        width: g.width,
        root,
        parent,
        parent_weight,
        order,
        depth,
    }
}
