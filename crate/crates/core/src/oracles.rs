//! Brute-force ground truth for small graphs.
//!
//! Everything here favors obviously-correct code over speed: spanning trees
//! come from include/exclude backtracking over the sorted edge list, and the
//! predicates re-check definitions literally rather than through the
//! one-pass shortcuts used in [`crate::graph`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsu::DisjointSets;
use crate::graph::{bfs_distances, is_bfs_tree, is_v_concentrated, max_stretch, Edge, Graph, GraphBuilder, GraphError, SpanningTree, Vertex};

/// Default ceiling on the number of trees an enumeration may produce.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration cap {cap} exceeded ({found} trees produced before stopping)")]
    CapExceeded { cap: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

struct Backtrack<'a, F> {
    edges: &'a [Edge],
    n: usize,
    chosen: Vec<Edge>,
    visit: F,
    count: usize,
    cap: usize,
}

impl<F: FnMut(&[Edge])> Backtrack<'_, F> {
    /// `comp[x]` is the component id of `x` under the chosen edges.
    fn run(&mut self, idx: usize, comp: &[usize]) -> Result<(), OracleError> {
        if self.chosen.len() + 1 == self.n {
            self.count += 1;
            if self.count > self.cap {
                return Err(OracleError::CapExceeded { cap: self.cap, found: self.count - 1 });
            }
            (self.visit)(&self.chosen);
            return Ok(());
        }
        if idx == self.edges.len() || self.edges.len() - idx < self.n - 1 - self.chosen.len() {
            return Ok(());
        }
        let e = self.edges[idx];
        let (cu, cv) = (comp[e.u], comp[e.v]);
        if cu != cv {
            let merged: Vec<usize> = comp.iter().map(|&c| if c == cv { cu } else { c }).collect();
            self.chosen.push(e);
            self.run(idx + 1, &merged)?;
            self.chosen.pop();
        }
        if self.completable(comp, idx + 1) {
            self.run(idx + 1, comp)?;
        }
        Ok(())
    }

    /// Whether the remaining edges can still join every component.
    fn completable(&self, comp: &[usize], from: usize) -> bool {
        let mut dsu = DisjointSets::new(self.n);
        for (x, &c) in comp.iter().enumerate() {
            dsu.union(x, c);
        }
        for e in &self.edges[from..] {
            dsu.union(e.u, e.v);
        }
        dsu.components() == 1
    }
}

/// Calls `visit` with the edge list of every spanning tree, in a fixed
/// order. Returns the number of trees.
pub fn for_each_spanning_tree(
    g: &Graph,
    cap: usize,
    visit: impl FnMut(&[Edge]),
) -> Result<usize, OracleError> {
    let n = g.vertex_count();
    if n == 0 {
        return Ok(0);
    }
    bfs_distances(g, 0)?;
    let mut bt = Backtrack {
        edges: g.edges(),
        n,
        chosen: Vec::with_capacity(n - 1),
        visit,
        count: 0,
        cap,
    };
    let comp: Vec<usize> = (0..n).collect();
    bt.run(0, &comp)?;
    Ok(bt.count)
}

pub fn enumerate_spanning_trees(g: &Graph, cap: usize) -> Result<Vec<SpanningTree<'_>>, OracleError> {
    let mut out = Vec::new();
    for_each_spanning_tree(g, cap, |edges| {
        out.push(SpanningTree::new(g, edges.iter().copied()).expect("backtracking yields spanning trees"));
    })?;
    Ok(out)
}

/// Minimum max-stretch over all spanning trees, with the first minimizer in
/// enumeration order.
pub fn exact_mmst(g: &Graph, cap: usize) -> Result<(usize, SpanningTree<'_>), OracleError> {
    min_stretch_over(g, cap, |_| true)
}

/// Minimum max-stretch over the `root`-concentrated spanning trees.
pub fn min_concentrated_stretch(g: &Graph, root: Vertex, cap: usize) -> Result<(usize, SpanningTree<'_>), OracleError> {
    g.check_vertex(root)?;
    min_stretch_over(g, cap, |t| concentrated_by_definition(t, root).unwrap_or(false))
}

fn min_stretch_over<'g>(
    g: &'g Graph,
    cap: usize,
    keep: impl Fn(&SpanningTree<'g>) -> bool,
) -> Result<(usize, SpanningTree<'g>), OracleError> {
    let mut best: Option<(usize, Vec<Edge>)> = None;
    for_each_spanning_tree(g, cap, |edges| {
        let t = SpanningTree::new(g, edges.iter().copied()).expect("backtracking yields spanning trees");
        if !keep(&t) {
            return;
        }
        let s = max_stretch(&t).max_stretch;
        if best.as_ref().is_none_or(|(b, _)| s < *b) {
            best = Some((s, edges.to_vec()));
        }
    })?;
    let (s, edges) = best.ok_or(GraphError::VertexOutOfRange { vertex: 0, vertex_count: 0 })?;
    Ok((s, SpanningTree::new(g, edges).expect("stored tree is valid")))
}

pub fn enumerate_v_concentrated_trees(g: &Graph, root: Vertex, cap: usize) -> Result<Vec<SpanningTree<'_>>, OracleError> {
    g.check_vertex(root)?;
    let mut out = Vec::new();
    for_each_spanning_tree(g, cap, |edges| {
        let t = SpanningTree::new(g, edges.iter().copied()).expect("backtracking yields spanning trees");
        if concentrated_by_definition(&t, root).unwrap_or(false) {
            out.push(t);
        }
    })?;
    Ok(out)
}

/// All BFS trees from `root`: one per choice of a strictly closer parent for
/// every non-root vertex.
pub fn enumerate_bfs_trees(g: &Graph, root: Vertex, cap: usize) -> Result<Vec<SpanningTree<'_>>, OracleError> {
    let dist = bfs_distances(g, root)?;
    let options: Vec<Vec<Vertex>> = (0..g.vertex_count())
        .map(|u| {
            if u == root {
                vec![root]
            } else {
                g.neighbors(u).iter().copied().filter(|&w| dist[w] + 1 == dist[u]).collect()
            }
        })
        .collect();
    let mut pick = vec![0usize; options.len()];
    let mut out = Vec::new();
    loop {
        if out.len() == cap {
            return Err(OracleError::CapExceeded { cap, found: out.len() });
        }
        let edges = (0..options.len())
            .filter(|&u| u != root)
            .map(|u| Edge::new(u, options[u][pick[u]]));
        out.push(SpanningTree::new(g, edges).expect("closer-parent choices form a tree"));
        // Odometer over parent choices.
        let mut k = 0;
        loop {
            if k == options.len() {
                return Ok(out);
            }
            pick[k] += 1;
            if pick[k] < options[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

/// A BFS tree from `root` whose parent choices are drawn from a generator
/// seeded with `seed`.
pub fn sample_bfs_tree(g: &Graph, root: Vertex, seed: u64) -> Result<SpanningTree<'_>, GraphError> {
    let dist = bfs_distances(g, root)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(g.vertex_count().saturating_sub(1));
    let mut closer = Vec::new();
    for u in 0..g.vertex_count() {
        if u == root {
            continue;
        }
        closer.clear();
        closer.extend(g.neighbors(u).iter().copied().filter(|&w| dist[w] + 1 == dist[u]));
        let parent = closer[rng.gen_range(0..closer.len())];
        edges.push(Edge::new(u, parent));
    }
    Ok(SpanningTree::new(g, edges).expect("closer-parent choices form a tree"))
}

/// Literal form of v-concentration: for every radius up to the eccentricity,
/// the tree edges inside the ball connect the ball.
pub fn concentrated_by_definition(t: &SpanningTree<'_>, root: Vertex) -> Result<bool, GraphError> {
    let dist = bfs_distances(t.host(), root)?;
    let ecc = dist.iter().copied().max().unwrap_or(0);
    for i in 0..=ecc {
        let inside: Vec<Vertex> = (0..dist.len()).filter(|&x| dist[x] <= i).collect();
        let mut dsu = DisjointSets::new(dist.len());
        for e in t.edges() {
            if dist[e.u] <= i && dist[e.v] <= i {
                dsu.union(e.u, e.v);
            }
        }
        let r = dsu.find(root);
        if inside.iter().any(|&x| dsu.find(x) != r) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The literal BFS-tree definition checked by parent pointers: rooted at
/// `root`, each parent is one step closer in the host.
pub fn bfs_by_parents(t: &SpanningTree<'_>, root: Vertex) -> Result<bool, GraphError> {
    let dist = bfs_distances(t.host(), root)?;
    let tree_dist = bfs_distances(&t.as_graph(), root)?;
    // A tree is a BFS tree iff tree depth equals host distance everywhere.
    Ok(dist == tree_dist)
}

/// Largest ratio `d_T(u, w) / d_G(u, w)` over all vertex pairs, returned as
/// the `(d_T, d_G)` pair attaining it. Distances come from plain BFS on the
/// host and on the tree, independent of [`max_stretch`].
pub fn all_pairs_stretch(t: &SpanningTree<'_>) -> Result<(usize, usize), GraphError> {
    let tree_graph = t.as_graph();
    let n = t.host().vertex_count();
    let mut best = (1usize, 1usize);
    for u in 0..n {
        let dg = bfs_distances(t.host(), u)?;
        let dt = bfs_distances(&tree_graph, u)?;
        for w in u + 1..n {
            // dt/dg > best.0/best.1
            if dt[w] * best.1 > best.0 * dg[w] {
                best = (dt[w], dg[w]);
            }
        }
    }
    Ok(best)
}

/// Whether every BFS tree is concentrated and every concentrated tree is a
/// spanning tree, for one graph and root. Returns the three counts.
pub fn family_counts(g: &Graph, root: Vertex, cap: usize) -> Result<(usize, usize, usize), OracleError> {
    let bfs = enumerate_bfs_trees(g, root, cap)?;
    let conc = enumerate_v_concentrated_trees(g, root, cap)?;
    let all = for_each_spanning_tree(g, cap, |_| {})?;
    Ok((bfs.len(), conc.len(), all))
}

/// Every labeled connected graph on `n` vertices (`n <= 6` is practical).
pub fn connected_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(Vertex, Vertex)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    assert!(pairs.len() < 32, "too many vertex pairs for exhaustive generation");
    (0u32..1 << pairs.len())
        .filter_map(|mask| {
            let mut b = GraphBuilder::new(n);
            for (k, &(u, v)) in pairs.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    b.add_edge(u, v);
                }
            }
            let g = b.build().expect("pairs are distinct");
            g.is_connected().then_some(g)
        })
        .collect()
}

/// Random connected graph on `n` vertices: `G(n, p)` with rejection.
pub fn random_connected_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    loop {
        let mut b = GraphBuilder::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    b.add_edge(u, v);
                }
            }
        }
        let g = b.build().expect("pairs are distinct");
        if g.is_connected() {
            return g;
        }
    }
}

/// Sanity helper for sweeps: BFS tree implies both concentration checks.
pub fn bfs_implies_concentrated(t: &SpanningTree<'_>, root: Vertex) -> Result<bool, GraphError> {
    Ok(!is_bfs_tree(t, root)? || (is_v_concentrated(t, root)? && concentrated_by_definition(t, root)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graph_from_edges;

    fn c4() -> Graph {
        graph_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap()
    }

    fn k4() -> Graph {
        graph_from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn path5() -> Graph {
        graph_from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap()
    }

    #[test]
    fn tree_counts() {
        assert_eq!(enumerate_spanning_trees(&k4(), DEFAULT_CAP).unwrap().len(), 16);
        assert_eq!(enumerate_spanning_trees(&c4(), DEFAULT_CAP).unwrap().len(), 4);
        assert_eq!(enumerate_spanning_trees(&path5(), DEFAULT_CAP).unwrap().len(), 1);
    }

    #[test]
    fn trees_are_distinct() {
        let k5 = connected_graphs(5).into_iter().max_by_key(|g| g.edge_count()).unwrap();
        let trees = enumerate_spanning_trees(&k5, DEFAULT_CAP).unwrap();
        assert_eq!(trees.len(), 125);
        let mut sets: Vec<Vec<Edge>> = trees.iter().map(|t| t.edges().to_vec()).collect();
        sets.sort();
        sets.dedup();
        assert_eq!(sets.len(), 125);
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(
            enumerate_spanning_trees(&k4(), 10).unwrap_err(),
            OracleError::CapExceeded { cap: 10, found: 10 }
        );
        assert!(enumerate_bfs_trees(&c4(), 0, 1).is_err());
    }

    #[test]
    fn disconnected_rejected() {
        let g = graph_from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(enumerate_spanning_trees(&g, 10), Err(OracleError::Graph(_))));
    }

    #[test]
    fn mmst_values() {
        assert_eq!(exact_mmst(&c4(), DEFAULT_CAP).unwrap().0, 3);
        assert_eq!(exact_mmst(&k4(), DEFAULT_CAP).unwrap().0, 2);
        assert_eq!(exact_mmst(&path5(), DEFAULT_CAP).unwrap().0, 1);
    }

    #[test]
    fn concentrated_families() {
        for v in 0..4 {
            assert_eq!(enumerate_v_concentrated_trees(&k4(), v, DEFAULT_CAP).unwrap().len(), 16);
            assert_eq!(enumerate_bfs_trees(&k4(), v, DEFAULT_CAP).unwrap().len(), 1);
        }
        let c = c4();
        let conc = enumerate_v_concentrated_trees(&c, 0, DEFAULT_CAP).unwrap();
        let missing: Vec<Edge> = conc
            .iter()
            .map(|t| *c.edges().iter().find(|e| !t.contains(e.u, e.v)).unwrap())
            .collect();
        assert_eq!(missing, vec![Edge::new(2, 3), Edge::new(1, 2)]);
    }

    #[test]
    fn sampled_bfs_trees() {
        let p = path5();
        for seed in 0..5 {
            assert_eq!(sample_bfs_tree(&p, 2, seed).unwrap().edges(), p.edges());
        }
        let k = k4();
        let star = [Edge::new(0, 1), Edge::new(0, 2), Edge::new(0, 3)];
        assert_eq!(sample_bfs_tree(&k, 0, 3).unwrap().edges(), &star);
        let c = c4();
        let mut seen: Vec<Vec<Edge>> = (0..32).map(|s| sample_bfs_tree(&c, 0, s).unwrap().edges().to_vec()).collect();
        seen.sort();
        seen.dedup();
        let expected: Vec<Vec<Edge>> = enumerate_v_concentrated_trees(&c, 0, DEFAULT_CAP)
            .unwrap()
            .iter()
            .map(|t| t.edges().to_vec())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(seen, expected);
        assert_eq!(sample_bfs_tree(&c, 0, 11).unwrap(), sample_bfs_tree(&c, 0, 11).unwrap());
    }

    #[test]
    fn all_pairs_matches_edge_stretch_on_c4() {
        let c = c4();
        for t in enumerate_spanning_trees(&c, DEFAULT_CAP).unwrap() {
            assert_eq!(all_pairs_stretch(&t).unwrap(), (3, 1));
        }
    }

    #[test]
    fn connected_graph_counts() {
        // OEIS A001187: 1, 1, 4, 38, 728.
        let counts: Vec<usize> = (1..=5).map(|n| connected_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 4, 38, 728]);
    }
}
