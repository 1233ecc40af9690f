//! Witness tree 7-spanner of a reduction graph, built from a satisfying
//! assignment.
//!
//! Per block: every variable vertex hangs off `v⊕` when its variable is true
//! and off `v⊖` otherwise; every `x_c` keeps its single sign edge; and for
//! each clause one satisfying variable `z` is picked, and all matrix edges
//! between `Q_c` and `{z, z_c}` are taken (rows of `z` and `z_c` are
//! complementary, so this is exactly eight edges).

use thiserror::Error;

use crate::cnf::{evaluate, Assignment, Clause, CnfError, Formula};
use crate::dsu::DisjointSets;
use crate::graph::{is_bfs_tree, is_v_concentrated, max_stretch, Edge, SpanningTree, TreeError, TreeMetric, Vertex};
use crate::reduction::{induced_edges, BlockInfo, ReductionError, ReductionGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("clause {clause} is false under the assignment")]
    ClauseFalse { clause: usize },
    #[error("no literal of {0} is true under the assignment")]
    NoSatisfier(Clause),
    #[error("variable x{var} does not make clause {clause} true")]
    BadChoice { clause: usize, var: usize },
    #[error("expected one satisfier per clause ({expected}), got {found}")]
    ChoiceLength { expected: usize, found: usize },
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("constructed edge set is not a spanning tree: {0}")]
    Tree(#[from] TreeError),
}

/// First variable, in literal order, whose literal is true under `a`.
pub fn choose_satisfying_variable(clause: &Clause, a: &Assignment) -> Result<usize, WitnessError> {
    clause
        .literals()
        .iter()
        .find(|l| l.is_true_under(a))
        .map(|l| l.var)
        .ok_or(WitnessError::NoSatisfier(*clause))
}

/// How the satisfying variable of each clause is picked.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SatisfierRule {
    #[default]
    FirstTrue,
    /// One variable per clause, in clause order.
    PerClause(Vec<usize>),
}

/// Every combination of satisfying-variable choices, clause by clause.
/// The product can be large; callers cap it.
pub fn all_satisfier_choices(f: &Formula, a: &Assignment) -> Vec<Vec<usize>> {
    let options: Vec<Vec<usize>> = f
        .clauses()
        .iter()
        .map(|c| c.literals().iter().filter(|l| l.is_true_under(a)).map(|l| l.var).collect())
        .collect();
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for opts in &options {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// A witness tree together with the satisfier picked for every clause.
#[derive(Debug, Clone)]
pub struct Witness<'g> {
    pub tree: SpanningTree<'g>,
    pub satisfiers: Vec<usize>,
}

pub fn tree_7_spanner<'g>(
    rg: &'g ReductionGraph,
    f: &Formula,
    a: &Assignment,
) -> Result<Witness<'g>, WitnessError> {
    tree_7_spanner_with(rg, f, a, &SatisfierRule::FirstTrue)
}

pub fn tree_7_spanner_with<'g>(
    rg: &'g ReductionGraph,
    f: &Formula,
    a: &Assignment,
    rule: &SatisfierRule,
) -> Result<Witness<'g>, WitnessError> {
    rg.check_formula(f)?;
    if !evaluate(f, a)? {
        let clause = f.clauses().iter().position(|c| !c.is_satisfied_by(a)).unwrap_or(0);
        return Err(WitnessError::ClauseFalse { clause: clause + 1 });
    }
    let satisfiers = resolve_satisfiers(f, a, rule)?;

    let g = rg.graph();
    let [q1, p1, v, p2, q2] = rg.path();
    let mut edges = Vec::with_capacity(g.vertex_count().saturating_sub(1));
    edges.extend([Edge::new(q1, p1), Edge::new(p1, v), Edge::new(v, p2), Edge::new(p2, q2)]);
    for block in rg.blocks() {
        for var in 1..=f.variable_count() {
            let side = if a.value(var) { block.vplus } else { block.vminus };
            edges.push(Edge::new(block.var_vertex(var), side));
        }
        for (ci, clause) in f.clauses().iter().enumerate() {
            for &xc in &block.var_clause_vertices[ci] {
                edges.extend(induced_edges(g, &[block.vplus, block.vminus, xc]));
            }
            let z = satisfiers[ci];
            let pos = clause.position_of(z).expect("satisfier checked against clause");
            let mut group: Vec<Vertex> = block.q_vertices[ci].to_vec();
            group.push(block.var_vertex(z));
            group.push(block.var_clause_vertices[ci][pos]);
            edges.extend(induced_edges(g, &group));
        }
    }
    let tree = SpanningTree::new(g, edges)?;
    Ok(Witness { tree, satisfiers })
}

fn resolve_satisfiers(f: &Formula, a: &Assignment, rule: &SatisfierRule) -> Result<Vec<usize>, WitnessError> {
    match rule {
        SatisfierRule::FirstTrue => f
            .clauses()
            .iter()
            .enumerate()
            .map(|(ci, c)| choose_satisfying_variable(c, a).map_err(|_| WitnessError::ClauseFalse { clause: ci + 1 }))
            .collect(),
        SatisfierRule::PerClause(vars) => {
            if vars.len() != f.clause_count() {
                return Err(WitnessError::ChoiceLength {
                    expected: f.clause_count(),
                    found: vars.len(),
                });
            }
            for (ci, (c, &var)) in f.clauses().iter().zip(vars).enumerate() {
                let ok = c.literals().iter().any(|l| l.var == var && l.is_true_under(a));
                if !ok {
                    return Err(WitnessError::BadChoice { clause: ci + 1, var });
                }
            }
            Ok(vars.clone())
        }
    }
}

/// Measured guarantees of a tree on a reduction graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub v_concentrated: bool,
    pub bfs_tree: bool,
    pub max_stretch: usize,
    /// Largest tree distance between two `q` vertices of one clause in one
    /// block.
    pub max_q_distance: usize,
    /// Largest `d_T(v⊕, v⊖)` over blocks.
    pub max_glue_distance: usize,
    /// Every block splits into exactly two tree components, one holding `v⊕`
    /// and the other `v⊖`.
    pub blocks_split_in_two: bool,
}

impl Certificate {
    pub fn is_tree_7_spanner_witness(&self) -> bool {
        self.v_concentrated
            && self.bfs_tree
            && self.max_stretch <= 7
            && self.max_q_distance <= 4
            && self.max_glue_distance <= 4
            && self.blocks_split_in_two
    }
}

pub fn certify(rg: &ReductionGraph, tree: &SpanningTree<'_>) -> Result<Certificate, WitnessError> {
    let center = rg.center();
    let v_concentrated = is_v_concentrated(tree, center).map_err(ReductionError::from)?;
    let bfs_tree = is_bfs_tree(tree, center).map_err(ReductionError::from)?;
    let stretch = max_stretch(tree).max_stretch;
    let metric = TreeMetric::new(tree, center);

    let mut max_q_distance = 0;
    let mut max_glue_distance = 0;
    for block in rg.blocks() {
        max_glue_distance = max_glue_distance.max(metric.distance(block.vplus, block.vminus));
        for qs in &block.q_vertices {
            for (k, &a) in qs.iter().enumerate() {
                for &b in &qs[k + 1..] {
                    max_q_distance = max_q_distance.max(metric.distance(a, b));
                }
            }
        }
    }
    let blocks_split_in_two = blocks_split_in_two(rg, tree);
    Ok(Certificate {
        v_concentrated,
        bfs_tree,
        max_stretch: stretch,
        max_q_distance,
        max_glue_distance,
        blocks_split_in_two,
    })
}

fn blocks_split_in_two(rg: &ReductionGraph, tree: &SpanningTree<'_>) -> bool {
    let n = rg.graph().vertex_count();
    let mut stamp = vec![usize::MAX; n];
    let mut local = vec![0usize; n];
    rg.blocks().iter().enumerate().all(|(bi, block)| {
        let verts: Vec<Vertex> = block.vertices().collect();
        for (k, &x) in verts.iter().enumerate() {
            stamp[x] = bi;
            local[x] = k;
        }
        block_components(block, tree, &verts, &stamp, &local, bi)
    })
}

fn block_components(
    block: &BlockInfo,
    tree: &SpanningTree<'_>,
    verts: &[Vertex],
    stamp: &[usize],
    local: &[usize],
    bi: usize,
) -> bool {
    let mut dsu = DisjointSets::new(verts.len());
    for &x in verts {
        for &y in tree.neighbors(x) {
            if stamp[y] == bi {
                dsu.union(local[x], local[y]);
            }
        }
    }
    let (p, m) = (local[block.vplus], local[block.vminus]);
    dsu.components() == 2 && dsu.find(p) != dsu.find(m)
}
