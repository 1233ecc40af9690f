use std::collections::VecDeque;

use thiserror::Error;

use super::{bfs_distances, Edge, Graph, GraphError, Vertex};
use crate::dsu::DisjointSets;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("edge {0} is not an edge of the host graph")]
    NotHostEdge(Edge),
    #[error("edge {0} listed twice")]
    DuplicateEdge(Edge),
    #[error("a spanning tree of {vertex_count} vertices needs {expected} edges, got {found}")]
    WrongEdgeCount {
        vertex_count: usize,
        expected: usize,
        found: usize,
    },
    #[error("edge {0} closes a cycle")]
    Cycle(Edge),
    #[error("tree was built for a host with {found} vertices, expected {expected}")]
    HostMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A spanning tree of `host`, validated on construction: every edge is a
/// host edge, there are exactly `n - 1` of them and they form no cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree<'g> {
    host: &'g Graph,
    edges: Vec<Edge>,
    adj: Vec<Vec<Vertex>>,
}

impl<'g> SpanningTree<'g> {
    pub fn new(host: &'g Graph, edges: impl IntoIterator<Item = Edge>) -> Result<Self, TreeError> {
        let n = host.vertex_count();
        let mut edges: Vec<Edge> = edges.into_iter().map(|e| Edge::new(e.u, e.v)).collect();
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(TreeError::DuplicateEdge(w[0]));
        }
        if let Some(&e) = edges.iter().find(|e| !host.has_edge(e.u, e.v)) {
            return Err(TreeError::NotHostEdge(e));
        }
        let expected = n.saturating_sub(1);
        if edges.len() != expected {
            return Err(TreeError::WrongEdgeCount {
                vertex_count: n,
                expected,
                found: edges.len(),
            });
        }
        let mut dsu = DisjointSets::new(n);
        if let Some(&e) = edges.iter().find(|e| !dsu.union(e.u, e.v)) {
            return Err(TreeError::Cycle(e));
        }
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(SpanningTree { host, edges, adj })
    }

    pub fn host(&self) -> &'g Graph {
        self.host
    }

    /// Tree edges in ascending order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn contains(&self, a: Vertex, b: Vertex) -> bool {
        a < self.adj.len() && self.adj[a].binary_search(&b).is_ok()
    }

    /// The tree as a standalone graph on the host's vertex set.
    pub fn as_graph(&self) -> Graph {
        let mut b = super::GraphBuilder::new(self.host.vertex_count());
        for e in &self.edges {
            b.add_edge(e.u, e.v);
        }
        b.build().expect("tree edges are a subset of a simple graph")
    }

    pub fn metric(&self) -> TreeMetric {
        TreeMetric::new(self, 0)
    }

    /// Parent pointers and BFS order of the tree rooted at `root`.
    pub(crate) fn rooted(&self, root: Vertex) -> (Vec<Vertex>, Vec<Vertex>) {
        let n = self.adj.len();
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        if n == 0 {
            return (parent, order);
        }
        parent[root] = root;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &w in &self.adj[u] {
                if parent[w] == usize::MAX {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        (parent, order)
    }
}

/// Exact tree distances through lowest common ancestors (binary lifting).
#[derive(Debug, Clone)]
pub struct TreeMetric {
    depth: Vec<u32>,
    /// `up[k][v]` is the `2^k`-th ancestor of `v` (the root maps to itself).
    up: Vec<Vec<u32>>,
}

impl TreeMetric {
    pub fn new(tree: &SpanningTree<'_>, root: Vertex) -> Self {
        let n = tree.adj.len();
        if n == 0 {
            return TreeMetric { depth: Vec::new(), up: Vec::new() };
        }
        let (parent, order) = tree.rooted(root);
        let mut depth = vec![0u32; n];
        for &u in order.iter().skip(1) {
            depth[u] = depth[parent[u]] + 1;
        }
        let max_depth = depth.iter().copied().max().unwrap_or(0);
        let levels = (u32::BITS - max_depth.leading_zeros()).max(1) as usize;
        let mut up = Vec::with_capacity(levels);
        up.push(parent.iter().map(|&p| p as u32).collect::<Vec<_>>());
        for k in 1..levels {
            let prev = &up[k - 1];
            let next: Vec<u32> = (0..n).map(|v| prev[prev[v] as usize]).collect();
            up.push(next);
        }
        TreeMetric { depth, up }
    }

    pub fn depth(&self, v: Vertex) -> usize {
        self.depth[v] as usize
    }

    pub fn lca(&self, a: Vertex, b: Vertex) -> Vertex {
        let (mut a, mut b) = (a as u32, b as u32);
        if self.depth[a as usize] < self.depth[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        let mut diff = self.depth[a as usize] - self.depth[b as usize];
        let mut k = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                a = self.up[k][a as usize];
            }
            diff >>= 1;
            k += 1;
        }
        if a == b {
            return a as usize;
        }
        for k in (0..self.up.len()).rev() {
            let (pa, pb) = (self.up[k][a as usize], self.up[k][b as usize]);
            if pa != pb {
                a = pa;
                b = pb;
            }
        }
        self.up[0][a as usize] as usize
    }

    pub fn distance(&self, a: Vertex, b: Vertex) -> usize {
        let l = self.lca(a, b);
        self.depth(a) + self.depth(b) - 2 * self.depth(l)
    }
}

/// Outcome of [`max_stretch`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StretchReport {
    /// Smallest `k` for which the tree is a tree `k`-spanner of its host.
    pub max_stretch: usize,
    /// First host edge (ascending order) attaining `max_stretch`; `None`
    /// only for an edgeless host.
    pub witness_edge: Option<Edge>,
    /// Tree distance between the endpoints of every host edge, in host edge
    /// order.
    pub per_edge_tree_distance: Vec<(Edge, usize)>,
}

/// Maximum stretch of `tree` over its host. Since the host is unweighted it
/// is enough to look at host edges: any longer pair is covered by
/// concatenating edge detours.
pub fn max_stretch(tree: &SpanningTree<'_>) -> StretchReport {
    let metric = tree.metric();
    let per_edge: Vec<(Edge, usize)> = tree
        .host()
        .edges()
        .iter()
        .map(|&e| (e, metric.distance(e.u, e.v)))
        .collect();
    let mut best: Option<(Edge, usize)> = None;
    for &(e, d) in &per_edge {
        if best.is_none_or(|(_, bd)| d > bd) {
            best = Some((e, d));
        }
    }
    StretchReport {
        max_stretch: best.map_or(1, |(_, d)| d),
        witness_edge: best.map(|(e, _)| e),
        per_edge_tree_distance: per_edge,
    }
}

/// Whether the subgraph of `tree` induced on every ball `N^i[root]` is
/// connected.
///
/// Equivalent test in one pass: rooted at `root`, every tree path from a
/// vertex `u` back to the root must stay inside `N^{d(u)}[root]`.
pub fn is_v_concentrated(tree: &SpanningTree<'_>, root: Vertex) -> Result<bool, GraphError> {
    let dist = bfs_distances(tree.host(), root)?;
    let (parent, order) = tree.rooted(root);
    let mut path_max = vec![0usize; dist.len()];
    for &u in order.iter().skip(1) {
        let p = parent[u];
        if path_max[p] > dist[u] {
            return Ok(false);
        }
        path_max[u] = path_max[p].max(dist[u]);
    }
    Ok(true)
}

/// Whether every vertex other than `root` has a tree neighbor one step closer
/// to `root` in the host.
pub fn is_bfs_tree(tree: &SpanningTree<'_>, root: Vertex) -> Result<bool, GraphError> {
    let dist = bfs_distances(tree.host(), root)?;
    Ok((0..dist.len()).filter(|&u| u != root).all(|u| {
        tree.neighbors(u)
            .iter()
            .any(|&w| dist[w] + 1 == dist[u])
    }))
}

/// For every `d`, checks that `N^d[root]` lies inside one component of the
/// tree induced on `N^{d + (stretch - 1) / 2}[root]`.
///
/// The caller is expected to pass a `stretch` the tree actually achieves;
/// the function only tests the containment.
pub fn check_ball_connectivity(
    tree: &SpanningTree<'_>,
    root: Vertex,
    stretch: usize,
) -> Result<bool, GraphError> {
    let dist = bfs_distances(tree.host(), root)?;
    let ecc = dist.iter().copied().max().unwrap_or(0);
    let slack = stretch.saturating_sub(1) / 2;
    for d in 0..=ecc {
        let radius = d + slack;
        let mut dsu = DisjointSets::new(dist.len());
        for e in tree.edges() {
            if dist[e.u] <= radius && dist[e.v] <= radius {
                dsu.union(e.u, e.v);
            }
        }
        let anchor = dsu.find(root);
        let ok = (0..dist.len())
            .filter(|&x| dist[x] <= d)
            .all(|x| dsu.find(x) == anchor);
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}
