//! 3-SAT through a tree-spanner provider: build the reduction graph, ask a
//! provider for a center-concentrated spanning tree, read one assignment per
//! block off the tree and accept on the first one that satisfies.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cnf::{evaluate, exhaustive_solve_within, Assignment, CnfError, Formula, DEFAULT_EXHAUSTIVE_THRESHOLD};
use crate::graph::{is_v_concentrated, max_stretch, Edge, GraphError, SpanningTree, TreeError, TreeFile, TreeMetric};
use crate::oracles::sample_bfs_tree;
use crate::reduction::{build_reduction, exact_size, BlockId, ReductionError, ReductionGraph, Q_PER_CLAUSE};
use crate::witness::tree_7_spanner;

/// Default ceiling on the reduction graph a decision may build.
pub const DEFAULT_MAX_VERTICES: u128 = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct ProviderError(pub String);

/// Source of candidate spanning trees for a reduction graph. The result is
/// validated by the caller.
pub trait SpannerProvider {
    fn name(&self) -> &str;
    fn provide(&self, rg: &ReductionGraph, f: &Formula) -> Result<Vec<Edge>, ProviderError>;
}

/// A BFS tree from the center, ties broken by a seeded generator.
#[derive(Debug, Clone, Default)]
pub struct BfsProvider {
    pub seed: u64,
}

impl SpannerProvider for BfsProvider {
    fn name(&self) -> &str {
        "bfs"
    }

    fn provide(&self, rg: &ReductionGraph, _f: &Formula) -> Result<Vec<Edge>, ProviderError> {
        let t = sample_bfs_tree(rg.graph(), rg.center(), self.seed).map_err(|e| ProviderError(e.to_string()))?;
        Ok(t.edges().to_vec())
    }
}

/// The best of `k` sampled BFS trees by max stretch.
#[derive(Debug, Clone)]
pub struct BestOfKProvider {
    pub k: usize,
    pub seed: u64,
}

impl SpannerProvider for BestOfKProvider {
    fn name(&self) -> &str {
        "best-of-k"
    }

    fn provide(&self, rg: &ReductionGraph, _f: &Formula) -> Result<Vec<Edge>, ProviderError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut best: Option<(usize, Vec<Edge>)> = None;
        for _ in 0..self.k.max(1) {
            let t = sample_bfs_tree(rg.graph(), rg.center(), rng.gen()).map_err(|e| ProviderError(e.to_string()))?;
            let s = max_stretch(&t).max_stretch;
            if best.as_ref().is_none_or(|(b, _)| s < *b) {
                best = Some((s, t.edges().to_vec()));
            }
        }
        Ok(best.expect("k >= 1").1)
    }
}

/// Solves the formula by brute force and returns the witness tree of a
/// satisfying assignment; falls back to a BFS tree when there is none.
/// Test use only.
#[derive(Debug, Clone)]
pub struct OracleProvider {
    pub max_variables: usize,
}

impl Default for OracleProvider {
    fn default() -> Self {
        OracleProvider { max_variables: 24 }
    }
}

impl SpannerProvider for OracleProvider {
    fn name(&self) -> &str {
        "oracle"
    }

    fn provide(&self, rg: &ReductionGraph, f: &Formula) -> Result<Vec<Edge>, ProviderError> {
        let solution = exhaustive_solve_within(f, self.max_variables).map_err(|e| ProviderError(e.to_string()))?;
        match solution {
            Some(a) => {
                let w = tree_7_spanner(rg, f, &a).map_err(|e| ProviderError(e.to_string()))?;
                Ok(w.tree.edges().to_vec())
            }
            None => BfsProvider { seed: 0 }.provide(rg, f),
        }
    }
}

/// A precomputed tree read from a file.
#[derive(Debug, Clone)]
pub struct FileProvider {
    pub tree: TreeFile,
}

impl SpannerProvider for FileProvider {
    fn name(&self) -> &str {
        "file"
    }

    fn provide(&self, rg: &ReductionGraph, _f: &Formula) -> Result<Vec<Edge>, ProviderError> {
        let n = rg.graph().vertex_count();
        if self.tree.host_vertex_count != n {
            return Err(ProviderError(format!(
                "tree file is for a {}-vertex graph, reduction graph has {n}",
                self.tree.host_vertex_count
            )));
        }
        Ok(self.tree.edges.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeciderConfig {
    /// Exponent `m` in `h = ceil((log2 n)^m)`.
    pub m_exponent: u32,
    /// Formulas with at most this many variables are solved directly.
    pub exhaustive_threshold: usize,
    /// Refuse to build reduction graphs with more vertices than this.
    pub max_vertices: u128,
}

impl Default for DeciderConfig {
    fn default() -> Self {
        DeciderConfig {
            m_exponent: 1,
            exhaustive_threshold: DEFAULT_EXHAUSTIVE_THRESHOLD,
            max_vertices: DEFAULT_MAX_VERTICES,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeciderError {
    #[error("provider `{provider}` failed: {message}")]
    ProviderFault { provider: String, message: String },
    #[error("reduction graph would have {vertices} vertices, above the limit of {limit}")]
    TooLarge { vertices: u128, limit: u128 },
    #[error("m exponent must be positive")]
    BadExponent,
    #[error("block ({block}) has an assignment satisfying the formula")]
    SatisfyingBlock { block: BlockId },
    #[error("tree is not concentrated at the center")]
    NotConcentrated,
    #[error("distance chain breaks at block ({block}): {message}")]
    ChainBroken { block: BlockId, message: String },
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Yes(Assignment),
    No,
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Yes(a) => write!(f, "SAT {a}"),
            Verdict::No => write!(f, "UNSAT"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Exhaustive,
    Reduction { h: usize, vertices: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTrace {
    pub verdict: Verdict,
    pub route: Route,
    /// Only filled on the reduction route, and only up to the accepting
    /// block.
    pub per_block_assignments: BTreeMap<BlockId, Assignment>,
    pub v_concentrated: Option<bool>,
    pub max_stretch: Option<usize>,
    /// Filled on a NO from a concentrated tree.
    pub chain_witnesses: BTreeMap<usize, (BlockId, usize)>,
    pub chain_error: Option<String>,
}

/// `ceil((log2 n)^m)`, at least 2.
pub fn compute_h(n: usize, m_exponent: u32) -> usize {
    if n < 2 {
        return 2;
    }
    let h = (n as f64).log2().powi(m_exponent as i32).ceil();
    (h as usize).max(2)
}

/// `a(x) = 1` iff the tree contains the edge from `x` to `v⊕` of `block`.
pub fn extract_assignment(t: &SpanningTree<'_>, rg: &ReductionGraph, block: BlockId) -> Result<Assignment, ReductionError> {
    let b = rg.block(block)?;
    Ok(Assignment::new(
        b.var_vertices.iter().map(|&x| t.contains(x, b.vplus)).collect(),
    ))
}

/// Variables of `block` whose vertex is tree-adjacent to neither or both of
/// `v⊕`, `v⊖`.
pub fn ambiguous_variables(t: &SpanningTree<'_>, rg: &ReductionGraph, block: BlockId) -> Result<Vec<usize>, ReductionError> {
    let b = rg.block(block)?;
    Ok(b.var_vertices
        .iter()
        .enumerate()
        .filter(|&(_, &x)| t.contains(x, b.vplus) == t.contains(x, b.vminus))
        .map(|(k, _)| k + 1)
        .collect())
}

pub fn decide_sat(f: &Formula, provider: &dyn SpannerProvider, config: &DeciderConfig) -> Result<DecisionTrace, DeciderError> {
    if config.m_exponent == 0 {
        return Err(DeciderError::BadExponent);
    }
    let n = f.variable_count();
    if n <= config.exhaustive_threshold {
        let verdict = match exhaustive_solve_within(f, config.exhaustive_threshold)? {
            Some(a) => Verdict::Yes(a),
            None => Verdict::No,
        };
        return Ok(DecisionTrace {
            verdict,
            route: Route::Exhaustive,
            per_block_assignments: BTreeMap::new(),
            v_concentrated: None,
            max_stretch: None,
            chain_witnesses: BTreeMap::new(),
            chain_error: None,
        });
    }

    let h = compute_h(n, config.m_exponent);
    let size = exact_size(n, f.clause_count(), h)?;
    if size.vertices > config.max_vertices {
        return Err(DeciderError::TooLarge { vertices: size.vertices, limit: config.max_vertices });
    }
    let rg = build_reduction(f, h)?;
    let fault = |message: String| DeciderError::ProviderFault { provider: provider.name().to_string(), message };
    let edges = provider.provide(&rg, f).map_err(|e| fault(e.0))?;
    let tree = SpanningTree::new(rg.graph(), edges).map_err(|e: TreeError| fault(e.to_string()))?;
    let concentrated = is_v_concentrated(&tree, rg.center())?;

    let mut trace = DecisionTrace {
        verdict: Verdict::No,
        route: Route::Reduction { h, vertices: rg.graph().vertex_count() },
        per_block_assignments: BTreeMap::new(),
        v_concentrated: Some(concentrated),
        max_stretch: Some(max_stretch(&tree).max_stretch),
        chain_witnesses: BTreeMap::new(),
        chain_error: None,
    };
    for b in rg.blocks() {
        let a = extract_assignment(&tree, &rg, b.id)?;
        let sat = evaluate(f, &a)?;
        trace.per_block_assignments.insert(b.id, a.clone());
        if sat {
            trace.verdict = Verdict::Yes(a);
            return Ok(trace);
        }
    }
    if concentrated {
        match verify_distance_chain(&tree, &rg, f) {
            Ok(chain) => trace.chain_witnesses = chain.layers,
            Err(e) => trace.chain_error = Some(e.to_string()),
        }
    }
    Ok(trace)
}

/// Blocks of growing glue distance, one per layer, plus the host edge that
/// the last one forces to be stretched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceChain {
    /// Layer `i` to `(block, d_T(v⊕, v⊖))` with the distance at least `4i`.
    pub layers: BTreeMap<usize, (BlockId, usize)>,
    /// An edge of the last block's variable vertex and its tree distance.
    pub stretched_edge: (Edge, usize),
}

/// Follows the unsatisfiability argument layer by layer. Requires a
/// center-concentrated tree on which no block yields a satisfying
/// assignment.
pub fn verify_distance_chain(t: &SpanningTree<'_>, rg: &ReductionGraph, f: &Formula) -> Result<DistanceChain, DeciderError> {
    rg.check_formula(f)?;
    if !is_v_concentrated(t, rg.center())? {
        return Err(DeciderError::NotConcentrated);
    }
    for b in rg.blocks() {
        if evaluate(f, &extract_assignment(t, rg, b.id)?)? {
            return Err(DeciderError::SatisfyingBlock { block: b.id });
        }
    }
    let metric = TreeMetric::new(t, rg.center());
    let mut layers = BTreeMap::new();
    let mut current = rg.block(BlockId::new(1, 1))?;
    for layer in 1..=rg.height() {
        let d = metric.distance(current.vplus, current.vminus);
        if d < 4 * layer {
            return Err(DeciderError::ChainBroken {
                block: current.id,
                message: format!("glue distance {d} < {}", 4 * layer),
            });
        }
        layers.insert(layer, (current.id, d));
        if layer == rg.height() {
            break;
        }
        let a = extract_assignment(t, rg, current.id)?;
        let clause = f
            .clauses()
            .iter()
            .position(|c| !c.is_satisfied_by(&a))
            .expect("assignment checked unsatisfying");
        let mut sides = [false; Q_PER_CLAUSE];
        for (r, side) in sides.iter_mut().enumerate() {
            let q = current.q_vertex(clause, r + 1);
            let (dp, dm) = (metric.distance(q, current.vplus), metric.distance(q, current.vminus));
            *side = match (dp == 2, dm == 2) {
                (true, false) => true,
                (false, true) => false,
                _ => {
                    return Err(DeciderError::ChainBroken {
                        block: current.id,
                        message: format!("q{}_c{} is at tree distance {dp}/{dm} from v+/v-", r + 1, clause + 1),
                    })
                }
            };
        }
        let r0 = (1..Q_PER_CLAUSE)
            .find(|&r| sides[r - 1] != sides[r])
            .ok_or_else(|| DeciderError::ChainBroken {
                block: current.id,
                message: format!("all q vertices of clause {} hang on one side", clause + 1),
            })?;
        current = rg.child(current.id, clause, r0).ok_or_else(|| DeciderError::ChainBroken {
            block: current.id,
            message: format!("no child at clause {}, r = {r0}", clause + 1),
        })?;
    }
    let mut stretched = (Edge::new(current.vplus, current.var_vertices[0]), 0);
    for &x in &current.var_vertices {
        for glue in [current.vplus, current.vminus] {
            let d = metric.distance(x, glue);
            if d > stretched.1 {
                stretched = (Edge::new(x, glue), d);
            }
        }
    }
    Ok(DistanceChain { layers, stretched_edge: stretched })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::all_sign_patterns;
    use crate::witness::tree_7_spanner;

    fn phi1() -> Formula {
        Formula::from_triples(3, &[[1, -2, 3]]).unwrap()
    }

    fn reduction_only() -> DeciderConfig {
        DeciderConfig { exhaustive_threshold: 0, ..DeciderConfig::default() }
    }

    #[test]
    fn h_values() {
        assert_eq!(compute_h(1, 1), 2);
        assert_eq!(compute_h(3, 1), 2);
        assert_eq!(compute_h(4, 1), 2);
        assert_eq!(compute_h(5, 1), 3);
        assert_eq!(compute_h(8, 1), 3);
        assert_eq!(compute_h(9, 1), 4);
        assert_eq!(compute_h(16, 2), 16);
    }

    #[test]
    fn extraction_round_trip() {
        let f = phi1();
        let rg = build_reduction(&f, 2).unwrap();
        for code in 0..8 {
            let a = Assignment::from_index(3, code);
            if !evaluate(&f, &a).unwrap() {
                continue;
            }
            let w = tree_7_spanner(&rg, &f, &a).unwrap();
            for b in rg.blocks() {
                assert_eq!(extract_assignment(&w.tree, &rg, b.id).unwrap(), a);
                assert!(ambiguous_variables(&w.tree, &rg, b.id).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn unknown_block() {
        let f = phi1();
        let rg = build_reduction(&f, 2).unwrap();
        let t = sample_bfs_tree(rg.graph(), rg.center(), 0).unwrap();
        assert!(extract_assignment(&t, &rg, BlockId::new(3, 1)).is_err());
        assert!(extract_assignment(&t, &rg, BlockId::new(2, 8)).is_err());
    }

    #[test]
    fn phi1_yes_with_oracle() {
        let f = phi1();
        let trace = decide_sat(&f, &OracleProvider::default(), &reduction_only()).unwrap();
        match &trace.verdict {
            Verdict::Yes(a) => assert!(evaluate(&f, a).unwrap()),
            Verdict::No => panic!("expected YES"),
        }
        assert_eq!(trace.route, Route::Reduction { h: 2, vertices: 117 });
        assert_eq!(trace.v_concentrated, Some(true));
        assert!(trace.max_stretch.unwrap() <= 7);
    }

    #[test]
    fn unsat_is_no_with_chain() {
        let f = all_sign_patterns(3, [1, 2, 3]).unwrap();
        let trace = decide_sat(&f, &BfsProvider { seed: 4 }, &reduction_only()).unwrap();
        assert_eq!(trace.verdict, Verdict::No);
        assert_eq!(trace.per_block_assignments.len(), 1 + 56);
        assert_eq!(trace.chain_error, None);
        let (id, d) = trace.chain_witnesses[&2];
        assert_eq!(id.layer, 2);
        assert!(d >= 8);
        assert!(trace.max_stretch.unwrap() >= 9);
    }

    #[test]
    fn chain_rejects_satisfying_tree() {
        let f = phi1();
        let rg = build_reduction(&f, 2).unwrap();
        let w = tree_7_spanner(&rg, &f, &Assignment::from_index(3, 0b100)).unwrap();
        assert_eq!(
            verify_distance_chain(&w.tree, &rg, &f),
            Err(DeciderError::SatisfyingBlock { block: BlockId::new(1, 1) })
        );
    }

    #[test]
    fn exhaustive_route() {
        let f = phi1();
        let trace = decide_sat(&f, &BfsProvider::default(), &DeciderConfig::default()).unwrap();
        assert_eq!(trace.route, Route::Exhaustive);
        assert!(trace.verdict.is_yes());
    }

    struct Broken;

    impl SpannerProvider for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn provide(&self, rg: &ReductionGraph, _f: &Formula) -> Result<Vec<Edge>, ProviderError> {
            Ok(rg.graph().edges()[..3].to_vec())
        }
    }

    #[test]
    fn malformed_tree_is_a_fault() {
        let err = decide_sat(&phi1(), &Broken, &reduction_only()).unwrap_err();
        assert!(matches!(err, DeciderError::ProviderFault { .. }));
    }

    #[test]
    fn file_provider_checks_size() {
        let p = FileProvider { tree: TreeFile { host_vertex_count: 4, edges: vec![] } };
        let err = decide_sat(&phi1(), &p, &reduction_only()).unwrap_err();
        assert!(matches!(err, DeciderError::ProviderFault { .. }));
    }

    #[test]
    fn size_limit() {
        let f = phi1();
        let config = DeciderConfig { max_vertices: 100, ..reduction_only() };
        assert_eq!(
            decide_sat(&f, &BfsProvider::default(), &config),
            Err(DeciderError::TooLarge { vertices: 117, limit: 100 })
        );
    }

    #[test]
    fn best_of_k_not_worse_than_first_sample() {
        let f = all_sign_patterns(3, [1, 2, 3]).unwrap();
        let rg = build_reduction(&f, 2).unwrap();
        let edges = BestOfKProvider { k: 4, seed: 1 }.provide(&rg, &f).unwrap();
        let t = SpanningTree::new(rg.graph(), edges).unwrap();
        assert!(max_stretch(&t).max_stretch >= 9);
        assert!(is_v_concentrated(&t, rg.center()).unwrap());
    }
}
