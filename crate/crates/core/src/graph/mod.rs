//! Immutable undirected simple graphs, BFS distances and spanning-tree
//! predicates.
//!
//! Vertices are dense integers `0..n`. Human-readable labels, when present,
//! live in a side table and never take part in identity.

mod format;
mod tree;

pub use format::{parse_graph, parse_tree, write_graph, write_tree, FormatError, TreeFile};
pub use tree::{
    check_ball_connectivity, is_bfs_tree, is_v_concentrated, max_stretch, SpanningTree,
    StretchReport, TreeError, TreeMetric,
};

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

pub type Vertex = usize;

/// Unordered vertex pair, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
}

impl Edge {
    /// Normalizes the endpoint order. Self-loops are representable here and
    /// rejected by the graph builder.
    pub fn new(a: Vertex, b: Vertex) -> Self {
        if a <= b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }

    pub fn other(&self, w: Vertex) -> Vertex {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.u, self.v)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("vertex {vertex} out of range (graph has {vertex_count} vertices)")]
    VertexOutOfRange { vertex: Vertex, vertex_count: usize },
    #[error("graph is disconnected: vertex {unreached} is not reachable from {origin}")]
    Disconnected { origin: Vertex, unreached: Vertex },
}

/// An undirected, unweighted simple graph. Built once through
/// [`GraphBuilder`] and never mutated afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<Vertex>>,
    edges: Vec<Edge>,
    labels: Vec<Option<String>>,
}

impl Graph {
    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in ascending `(u, v)` order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, a: Vertex, b: Vertex) -> bool {
        a < self.adj.len() && self.adj[a].binary_search(&b).is_ok()
    }

    pub fn label(&self, v: Vertex) -> Option<&str> {
        self.labels.get(v).and_then(|l| l.as_deref())
    }

    pub fn has_labels(&self) -> bool {
        self.labels.iter().any(Option::is_some)
    }

    /// First vertex carrying `label`, if any.
    pub fn find_label(&self, label: &str) -> Option<Vertex> {
        self.labels.iter().position(|l| l.as_deref() == Some(label))
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<(), GraphError> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange {
                vertex: v,
                vertex_count: self.vertex_count(),
            })
        }
    }

    /// A graph is a tree iff it is connected with `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.vertex_count() > 0
            && self.edge_count() + 1 == self.vertex_count()
            && self.is_connected()
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() == 0 || bfs_distances(self, 0).is_ok()
    }
}

/// Accumulates edges and labels, then validates them into a [`Graph`].
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    vertex_count: usize,
    edges: Vec<Edge>,
    labels: Vec<Option<String>>,
}

impl GraphBuilder {
    pub fn new(vertex_count: usize) -> Self {
        GraphBuilder {
            vertex_count,
            edges: Vec::new(),
            labels: vec![None; vertex_count],
        }
    }

    pub fn with_edge_capacity(mut self, edges: usize) -> Self {
        self.edges.reserve(edges);
        self
    }

    pub fn add_edge(&mut self, a: Vertex, b: Vertex) -> &mut Self {
        self.edges.push(Edge::new(a, b));
        self
    }

    pub fn set_label(&mut self, v: Vertex, label: impl Into<String>) -> &mut Self {
        if v < self.labels.len() {
            self.labels[v] = Some(label.into());
        }
        self
    }

    pub fn build(mut self) -> Result<Graph, GraphError> {
        let n = self.vertex_count;
        for e in &self.edges {
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if e.v >= n {
                return Err(GraphError::VertexOutOfRange {
                    vertex: e.v,
                    vertex_count: n,
                });
            }
        }
        self.edges.sort_unstable();
        if let Some(w) = self.edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0]));
        }
        let mut degree = vec![0usize; n];
        for e in &self.edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut adj: Vec<Vec<Vertex>> = degree.iter().map(|&d| Vec::with_capacity(d)).collect();
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph {
            adj,
            edges: self.edges,
            labels: self.labels,
        })
    }
}

/// Convenience constructor for tests and small fixtures.
pub fn graph_from_edges(vertex_count: usize, edges: &[(Vertex, Vertex)]) -> Result<Graph, GraphError> {
    let mut b = GraphBuilder::new(vertex_count);
    for &(u, v) in edges {
        b.add_edge(u, v);
    }
    b.build()
}

/// `d_G(source, x)` for every vertex `x`. Fails on a disconnected graph,
/// naming the smallest unreached vertex.
pub fn bfs_distances(g: &Graph, source: Vertex) -> Result<Vec<usize>, GraphError> {
    g.check_vertex(source)?;
    let dist = bfs_partial(g, source);
    match dist.iter().position(|&d| d == usize::MAX) {
        Some(unreached) => Err(GraphError::Disconnected { origin: source, unreached }),
        None => Ok(dist),
    }
}

/// BFS distances with `usize::MAX` marking unreachable vertices.
pub(crate) fn bfs_partial(g: &Graph, source: Vertex) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.vertex_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// The closed ball `N^radius[v]`, as an ascending vertex list.
pub fn neighborhood(g: &Graph, v: Vertex, radius: usize) -> Result<Vec<Vertex>, GraphError> {
    g.check_vertex(v)?;
    let dist = bfs_partial(g, v);
    Ok((0..g.vertex_count()).filter(|&x| dist[x] <= radius).collect())
}

/// Largest BFS distance from `v`; the graph must be connected.
pub fn eccentricity(g: &Graph, v: Vertex) -> Result<usize, GraphError> {
    Ok(bfs_distances(g, v)?.into_iter().max().unwrap_or(0))
}
