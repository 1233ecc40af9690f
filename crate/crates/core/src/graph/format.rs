//! Line-oriented text formats for graphs and trees.
//!
//! Graph file:
//!
//! ```text
//! g <vertex_count> <edge_count>
//! e <u> <v>            (one per edge, u < v)
//! l <u> <label>        (optional)
//! ```
//!
//! Tree file: `t <host_vertex_count>` followed by `e <u> <v>` lines. Blank
//! lines are ignored; any other line prefix is an error.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Edge, Graph, GraphBuilder, GraphError, SpanningTree, Vertex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `{0}` header line")]
    MissingHeader(&'static str),
    #[error("header announces {expected} edges, file lists {found}")]
    EdgeCountMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_num(line: usize, token: Option<&str>, what: &str) -> Result<usize, FormatError> {
    let token = token.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| syntax(line, format!("invalid {what} `{token}`")))
}

fn no_trailing<'a>(line: usize, mut rest: impl Iterator<Item = &'a str>) -> Result<(), FormatError> {
    match rest.next() {
        Some(tok) => Err(syntax(line, format!("unexpected trailing token `{tok}`"))),
        None => Ok(()),
    }
}

pub fn parse_graph(text: &str) -> Result<Graph, FormatError> {
    let mut header: Option<(usize, usize)> = None;
    let mut builder = GraphBuilder::default();
    let mut found_edges = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut tokens = raw.split_whitespace();
        let Some(kind) = tokens.next() else { continue };
        if kind != "g" && header.is_none() {
            return Err(FormatError::MissingHeader("g"));
        }
        match kind {
            "g" => {
                if header.is_some() {
                    return Err(syntax(line, "duplicate `g` header"));
                }
                let n = parse_num(line, tokens.next(), "vertex count")?;
                let m = parse_num(line, tokens.next(), "edge count")?;
                no_trailing(line, tokens)?;
                header = Some((n, m));
                builder = GraphBuilder::new(n).with_edge_capacity(m);
            }
            "e" => {
                let u = parse_num(line, tokens.next(), "edge endpoint")?;
                let v = parse_num(line, tokens.next(), "edge endpoint")?;
                no_trailing(line, tokens)?;
                if u >= v {
                    return Err(syntax(line, format!("edge endpoints must satisfy u < v, got {u} {v}")));
                }
                builder.add_edge(u, v);
                found_edges += 1;
            }
            "l" => {
                let u = parse_num(line, tokens.next(), "vertex")?;
                let label = tokens.next().ok_or_else(|| syntax(line, "missing label"))?;
                no_trailing(line, tokens)?;
                let n = header.map_or(0, |h| h.0);
                if u >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: u, vertex_count: n }.into());
                }
                builder.set_label(u, label);
            }
            other => return Err(syntax(line, format!("unknown line prefix `{other}`"))),
        }
    }
    let (_, m) = header.ok_or(FormatError::MissingHeader("g"))?;
    if m != found_edges {
        return Err(FormatError::EdgeCountMismatch { expected: m, found: found_edges });
    }
    Ok(builder.build()?)
}

pub fn write_graph(g: &Graph) -> String {
    let mut out = String::with_capacity(16 * (g.edge_count() + 1));
    let _ = writeln!(out, "g {} {}", g.vertex_count(), g.edge_count());
    for e in g.edges() {
        let _ = writeln!(out, "e {} {}", e.u, e.v);
    }
    for v in 0..g.vertex_count() {
        if let Some(label) = g.label(v) {
            let _ = writeln!(out, "l {v} {label}");
        }
    }
    out
}

/// Parsed but not yet validated tree file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeFile {
    pub host_vertex_count: usize,
    pub edges: Vec<Edge>,
}

impl TreeFile {
    /// Validates the listed edges as a spanning tree of `host`.
    pub fn into_tree(self, host: &Graph) -> Result<SpanningTree<'_>, super::TreeError> {
        if self.host_vertex_count != host.vertex_count() {
            return Err(super::TreeError::HostMismatch {
                expected: host.vertex_count(),
                found: self.host_vertex_count,
            });
        }
        SpanningTree::new(host, self.edges)
    }
}

pub fn parse_tree(text: &str) -> Result<TreeFile, FormatError> {
    let mut host: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut tokens = raw.split_whitespace();
        let Some(kind) = tokens.next() else { continue };
        match kind {
            "t" => {
                if host.is_some() {
                    return Err(syntax(line, "duplicate `t` header"));
                }
                host = Some(parse_num(line, tokens.next(), "vertex count")?);
                no_trailing(line, tokens)?;
            }
            "e" => {
                if host.is_none() {
                    return Err(FormatError::MissingHeader("t"));
                }
                let u: Vertex = parse_num(line, tokens.next(), "edge endpoint")?;
                let v: Vertex = parse_num(line, tokens.next(), "edge endpoint")?;
                no_trailing(line, tokens)?;
                edges.push(Edge::new(u, v));
            }
            other => return Err(syntax(line, format!("unknown line prefix `{other}`"))),
        }
    }
    Ok(TreeFile {
        host_vertex_count: host.ok_or(FormatError::MissingHeader("t"))?,
        edges,
    })
}

pub fn write_tree(tree: &SpanningTree<'_>) -> String {
    let mut out = String::with_capacity(16 * (tree.edges().len() + 1));
    let _ = writeln!(out, "t {}", tree.host().vertex_count());
    for e in tree.edges() {
        let _ = writeln!(out, "e {} {}", e.u, e.v);
    }
    out
}
