//! Building-block gadget and layered reduction graph.
//!
//! A building block `G^{i,j}` holds two glue vertices `v⊕`, `v⊖`, one vertex
//! per formula variable, and per clause three variable-in-clause vertices plus
//! eight `q` vertices wired to the clause's six "g-array" vertices through
//! [`MATRIX_M`]. The reduction graph starts from the path `q1 p1 v p2 q2`,
//! glues block `(1,1)` onto its endpoints, then for every block of layer
//! `i - 1`, every clause and every `r` in `1..=7` glues a fresh layer-`i`
//! block onto the pair `(q_r, q_{r+1})`.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::cnf::Formula;
use crate::graph::{Edge, Graph, GraphBuilder, GraphError, Vertex};

/// Rows wire the g-array `[y, y_c, z, z_c, w, w_c]` to `q_1..q_8`.
pub const MATRIX_M: [[u8; 8]; 6] = [
    [1, 1, 1, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 1, 1, 1],
    [1, 1, 0, 0, 1, 1, 0, 0],
    [0, 0, 1, 1, 0, 0, 1, 1],
    [1, 0, 1, 0, 1, 0, 1, 0],
    [0, 1, 0, 1, 0, 1, 0, 1],
];

/// Number of `q` vertices per clause.
pub const Q_PER_CLAUSE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("reduction height must be greater than 1, got {0}")]
    HeightTooSmall(usize),
    #[error("size parameters invalid: {0}")]
    BadParameters(String),
    #[error("size computation overflows")]
    Overflow,
    #[error("unknown block ({0})")]
    UnknownBlock(BlockId),
    #[error("registry line {line}: {message}")]
    Registry { line: usize, message: String },
    #[error("reduction graph does not match the formula: {0}")]
    FormulaMismatch(String),
    #[error("inconsistent reduction graph: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `(layer, index)`, both 1-based; the index restarts at 1 in every layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId {
    pub layer: usize,
    pub index: usize,
}

impl BlockId {
    pub fn new(layer: usize, index: usize) -> Self {
        BlockId { layer, index }
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.layer, self.index)
    }
}

impl FromStr for BlockId {
    type Err = String;

    /// Accepts `i,j`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("expected `layer,index`, got `{s}`"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid block id `{s}`"));
        Ok(BlockId::new(parse(a)?, parse(b)?))
    }
}

/// Role of a vertex. Clause indices and `r` are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexLabel {
    PathQ1,
    PathP1,
    CenterV,
    PathP2,
    PathQ2,
    VPlus(BlockId),
    VMinus(BlockId),
    Var { var: usize, block: BlockId },
    VarInClause { var: usize, clause: usize, block: BlockId },
    Q { r: usize, clause: usize, block: BlockId },
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |f: &mut fmt::Formatter<'_>, b: &BlockId| write!(f, "@{}.{}", b.layer, b.index);
        match self {
            VertexLabel::PathQ1 => f.write_str("q1"),
            VertexLabel::PathP1 => f.write_str("p1"),
            VertexLabel::CenterV => f.write_str("v"),
            VertexLabel::PathP2 => f.write_str("p2"),
            VertexLabel::PathQ2 => f.write_str("q2"),
            VertexLabel::VPlus(b) => {
                f.write_str("vplus")?;
                at(f, b)
            }
            VertexLabel::VMinus(b) => {
                f.write_str("vminus")?;
                at(f, b)
            }
            VertexLabel::Var { var, block } => {
                write!(f, "x{var}")?;
                at(f, block)
            }
            VertexLabel::VarInClause { var, clause, block } => {
                write!(f, "x{var}_c{clause}")?;
                at(f, block)
            }
            VertexLabel::Q { r, clause, block } => {
                write!(f, "q{r}_c{clause}")?;
                at(f, block)
            }
        }
    }
}

impl FromStr for VertexLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("unrecognized vertex label `{s}`");
        match s {
            "q1" => return Ok(VertexLabel::PathQ1),
            "p1" => return Ok(VertexLabel::PathP1),
            "v" => return Ok(VertexLabel::CenterV),
            "p2" => return Ok(VertexLabel::PathP2),
            "q2" => return Ok(VertexLabel::PathQ2),
            _ => {}
        }
        let (name, block) = s.split_once('@').ok_or_else(bad)?;
        let (layer, index) = block.split_once('.').ok_or_else(bad)?;
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let block = BlockId::new(num(layer)?, num(index)?);
        if name == "vplus" {
            return Ok(VertexLabel::VPlus(block));
        }
        if name == "vminus" {
            return Ok(VertexLabel::VMinus(block));
        }
        let (head, clause) = match name.split_once("_c") {
            Some((h, c)) => (h, Some(num(c)?)),
            None => (name, None),
        };
        match (head.as_bytes().first(), clause) {
            (Some(b'x'), None) => Ok(VertexLabel::Var { var: num(&head[1..])?, block }),
            (Some(b'x'), Some(clause)) => Ok(VertexLabel::VarInClause { var: num(&head[1..])?, clause, block }),
            (Some(b'q'), Some(clause)) => Ok(VertexLabel::Q { r: num(&head[1..])?, clause, block }),
            _ => Err(bad()),
        }
    }
}

/// Where a block is glued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attachment {
    /// Block `(1,1)`: `v⊕ = q1`, `v⊖ = q2` of the starting path.
    Path,
    /// `v⊕ = q_{r,c}` and `v⊖ = q_{r+1,c}` of `parent`; `clause` is a 0-based
    /// clause position, `r` lies in `1..=7`.
    Block { parent: BlockId, clause: usize, r: usize },
}

/// Vertex registry of one building block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInfo {
    pub id: BlockId,
    pub vplus: Vertex,
    pub vminus: Vertex,
    /// Indexed by `var - 1`.
    pub var_vertices: Vec<Vertex>,
    /// Per clause (0-based), the `x_c` vertices in literal order.
    pub var_clause_vertices: Vec<[Vertex; 3]>,
    /// Per clause (0-based), `q_1..q_8`.
    pub q_vertices: Vec<[Vertex; Q_PER_CLAUSE]>,
    pub attachment: Attachment,
}

impl BlockInfo {
    pub fn var_vertex(&self, var: usize) -> Vertex {
        self.var_vertices[var - 1]
    }

    /// `q_{r,c}` with `clause` 0-based and `r` in `1..=8`.
    pub fn q_vertex(&self, clause: usize, r: usize) -> Vertex {
        self.q_vertices[clause][r - 1]
    }

    /// Every vertex of the block, glue vertices first.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        [self.vplus, self.vminus]
            .into_iter()
            .chain(self.var_vertices.iter().copied())
            .chain(self.var_clause_vertices.iter().flatten().copied())
            .chain(self.q_vertices.iter().flatten().copied())
    }

    /// The g-array `[y, y_c, z, z_c, w, w_c]` of a clause, given its variables
    /// in literal order.
    pub fn g_array(&self, clause: usize, vars: [usize; 3]) -> [Vertex; 6] {
        let xc = self.var_clause_vertices[clause];
        [
            self.var_vertex(vars[0]),
            xc[0],
            self.var_vertex(vars[1]),
            xc[1],
            self.var_vertex(vars[2]),
            xc[2],
        ]
    }
}

/// Appends one block's fresh vertices, edges and labels. The glue vertices
/// are supplied by the caller so that identification is a binding, never a
/// merge.
struct BlockEmitter<'a> {
    formula: &'a Formula,
    next_id: Vertex,
    edges: Vec<(Vertex, Vertex)>,
    labels: Vec<(Vertex, VertexLabel)>,
}

impl<'a> BlockEmitter<'a> {
    fn new(formula: &'a Formula, first_fresh: Vertex) -> Self {
        BlockEmitter {
            formula,
            next_id: first_fresh,
            edges: Vec::new(),
            labels: Vec::new(),
        }
    }

    fn fresh(&mut self, label: VertexLabel) -> Vertex {
        let v = self.next_id;
        self.next_id += 1;
        self.labels.push((v, label));
        v
    }

    fn emit(&mut self, block: BlockId, vplus: Vertex, vminus: Vertex, attachment: Attachment) -> BlockInfo {
        let f = self.formula;
        let var_vertices: Vec<Vertex> = (1..=f.variable_count())
            .map(|var| self.fresh(VertexLabel::Var { var, block }))
            .collect();
        let mut var_clause_vertices = Vec::with_capacity(f.clause_count());
        let mut q_vertices = Vec::with_capacity(f.clause_count());
        for (ci, clause) in f.clauses().iter().enumerate() {
            let xc = clause
                .variables()
                .map(|var| self.fresh(VertexLabel::VarInClause { var, clause: ci + 1, block }));
            let q: [Vertex; Q_PER_CLAUSE] =
                std::array::from_fn(|r| self.fresh(VertexLabel::Q { r: r + 1, clause: ci + 1, block }));
            var_clause_vertices.push(xc);
            q_vertices.push(q);
        }
        for &x in &var_vertices {
            self.edges.push((x, vplus));
            self.edges.push((x, vminus));
        }
        let info = BlockInfo {
            id: block,
            vplus,
            vminus,
            var_vertices,
            var_clause_vertices,
            q_vertices,
            attachment,
        };
        for (ci, clause) in f.clauses().iter().enumerate() {
            let g = info.g_array(ci, clause.variables());
            for (k, row) in MATRIX_M.iter().enumerate() {
                for (l, &bit) in row.iter().enumerate() {
                    if bit == 1 {
                        self.edges.push((g[k], info.q_vertices[ci][l]));
                    }
                }
            }
            for (pos, lit) in clause.literals().iter().enumerate() {
                let side = if lit.positive { vplus } else { vminus };
                self.edges.push((info.var_clause_vertices[ci][pos], side));
            }
        }
        info
    }
}

/// Fresh vertices per block: one per variable and eleven per clause.
pub fn block_fresh_vertices(n: usize, m: usize) -> usize {
    n + 11 * m
}

/// Edges per block: two per variable, 24 matrix edges and 3 sign edges per
/// clause.
pub fn block_edges(n: usize, m: usize) -> usize {
    2 * n + 27 * m
}

/// One standalone building block. Local ids: `v⊕ = 0`, `v⊖ = 1`, fresh
/// vertices from 2 on.
pub fn get_bb(f: &Formula, layer: usize, index: usize) -> Result<(Graph, BlockInfo), ReductionError> {
    let id = BlockId::new(layer, index);
    let mut em = BlockEmitter::new(f, 2);
    let info = em.emit(id, 0, 1, Attachment::Path);
    let mut b = GraphBuilder::new(em.next_id).with_edge_capacity(em.edges.len());
    b.set_label(0, VertexLabel::VPlus(id).to_string());
    b.set_label(1, VertexLabel::VMinus(id).to_string());
    for (v, label) in &em.labels {
        b.set_label(*v, label.to_string());
    }
    for &(u, v) in &em.edges {
        b.add_edge(u, v);
    }
    Ok((b.build()?, info))
}

/// Reduction graph plus its block registry.
#[derive(Debug, Clone)]
pub struct ReductionGraph {
    graph: Graph,
    /// `[q1, p1, v, p2, q2]`.
    path: [Vertex; 5],
    blocks: Vec<BlockInfo>,
    index: HashMap<BlockId, usize>,
    /// Number of blocks per layer; `layer_sizes[0]` is layer 1.
    layer_sizes: Vec<usize>,
    variable_count: usize,
    clause_count: usize,
    /// Per clause, its variables in literal order.
    clause_vars: Vec<[usize; 3]>,
}

pub fn build_reduction(f: &Formula, h: usize) -> Result<ReductionGraph, ReductionError> {
    if h <= 1 {
        return Err(ReductionError::HeightTooSmall(h));
    }
    let (n, m) = (f.variable_count(), f.clause_count());
    let size = exact_size(n, m, h)?;
    let total = usize::try_from(size.vertices).map_err(|_| ReductionError::Overflow)?;
    let total_edges = usize::try_from(size.edges).map_err(|_| ReductionError::Overflow)?;

    let path = [0, 1, 2, 3, 4];
    let mut em = BlockEmitter::new(f, 5);
    em.edges.reserve(total_edges);
    em.labels.reserve(total);
    for w in path.windows(2) {
        em.edges.push((w[0], w[1]));
    }
    let mut blocks = Vec::with_capacity(size.blocks as usize);
    blocks.push(em.emit(BlockId::new(1, 1), path[0], path[4], Attachment::Path));
    let mut layer_sizes = vec![1];
    let mut layer_start = 0;
    for layer in 2..=h {
        let layer_end = blocks.len();
        let mut j = 0;
        for s in layer_start..layer_end {
            for clause in 0..m {
                for r in 1..Q_PER_CLAUSE {
                    j += 1;
                    let parent = &blocks[s];
                    let (vplus, vminus) = (parent.q_vertex(clause, r), parent.q_vertex(clause, r + 1));
                    let attachment = Attachment::Block { parent: parent.id, clause, r };
                    let info = em.emit(BlockId::new(layer, j), vplus, vminus, attachment);
                    blocks.push(info);
                }
            }
        }
        layer_sizes.push(j);
        layer_start = layer_end;
    }
    debug_assert_eq!(em.next_id, total);

    let mut b = GraphBuilder::new(total).with_edge_capacity(em.edges.len());
    for (v, label) in [
        VertexLabel::PathQ1,
        VertexLabel::PathP1,
        VertexLabel::CenterV,
        VertexLabel::PathP2,
        VertexLabel::PathQ2,
    ]
    .into_iter()
    .enumerate()
    {
        b.set_label(v, label.to_string());
    }
    for (v, label) in &em.labels {
        b.set_label(*v, label.to_string());
    }
    for &(u, v) in &em.edges {
        b.add_edge(u, v);
    }
    let graph = b.build()?;
    let index = blocks.iter().enumerate().map(|(k, b)| (b.id, k)).collect();
    Ok(ReductionGraph {
        graph,
        path,
        blocks,
        index,
        layer_sizes,
        variable_count: n,
        clause_count: m,
        clause_vars: f.clauses().iter().map(|c| c.variables()).collect(),
    })
}

impl ReductionGraph {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// The center vertex `v`.
    pub fn center(&self) -> Vertex {
        self.path[2]
    }

    /// `[q1, p1, v, p2, q2]`.
    pub fn path(&self) -> [Vertex; 5] {
        self.path
    }

    /// Blocks in registry order: layer by layer, index ascending.
    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> Result<&BlockInfo, ReductionError> {
        self.index
            .get(&id)
            .map(|&k| &self.blocks[k])
            .ok_or(ReductionError::UnknownBlock(id))
    }

    pub fn height(&self) -> usize {
        self.layer_sizes.len()
    }

    /// `b(i)` for `i = 1..=h`.
    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layer(&self, layer: usize) -> impl Iterator<Item = &BlockInfo> + '_ {
        self.blocks.iter().filter(move |b| b.id.layer == layer)
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn clause_count(&self) -> usize {
        self.clause_count
    }

    /// The block glued onto `q_{r,c}`, `q_{r+1,c}` of `parent` (`clause`
    /// 0-based, `r` in `1..=7`), if any.
    pub fn child(&self, parent: BlockId, clause: usize, r: usize) -> Option<&BlockInfo> {
        if parent.layer >= self.height() || r == 0 || r >= Q_PER_CLAUSE || clause >= self.clause_count {
            return None;
        }
        let per_parent = self.clause_count * (Q_PER_CLAUSE - 1);
        let index = (parent.index - 1) * per_parent + clause * (Q_PER_CLAUSE - 1) + r;
        self.block(BlockId::new(parent.layer + 1, index)).ok()
    }

    /// Every role of `v`; identified vertices carry two or more.
    pub fn roles(&self, v: Vertex) -> Vec<VertexLabel> {
        let mut roles = Vec::new();
        const PATH: [VertexLabel; 5] = [
            VertexLabel::PathQ1,
            VertexLabel::PathP1,
            VertexLabel::CenterV,
            VertexLabel::PathP2,
            VertexLabel::PathQ2,
        ];
        if let Some(k) = self.path.iter().position(|&p| p == v) {
            roles.push(PATH[k]);
        }
        for b in &self.blocks {
            let id = b.id;
            if b.vplus == v {
                roles.push(VertexLabel::VPlus(id));
            }
            if b.vminus == v {
                roles.push(VertexLabel::VMinus(id));
            }
            if let Some(k) = b.var_vertices.iter().position(|&x| x == v) {
                roles.push(VertexLabel::Var { var: k + 1, block: id });
            }
            for (ci, (xc, q)) in b.var_clause_vertices.iter().zip(&b.q_vertices).enumerate() {
                if let Some(k) = xc.iter().position(|&x| x == v) {
                    let var = self.clause_vars[ci][k];
                    roles.push(VertexLabel::VarInClause { var, clause: ci + 1, block: id });
                }
                if let Some(k) = q.iter().position(|&x| x == v) {
                    roles.push(VertexLabel::Q { r: k + 1, clause: ci + 1, block: id });
                }
            }
        }
        roles
    }

    /// Variables of a clause (0-based) in literal order.
    pub fn clause_variables(&self, clause: usize) -> [usize; 3] {
        self.clause_vars[clause]
    }

    /// Checks that this graph was built from `f`: same variable and clause
    /// counts, same clause variables, and sign edges matching every literal
    /// in every block.
    pub fn check_formula(&self, f: &Formula) -> Result<(), ReductionError> {
        if f.variable_count() != self.variable_count || f.clause_count() != self.clause_count {
            return Err(ReductionError::FormulaMismatch(format!(
                "graph built for {} variables / {} clauses, formula has {} / {}",
                self.variable_count,
                self.clause_count,
                f.variable_count(),
                f.clause_count()
            )));
        }
        for (ci, clause) in f.clauses().iter().enumerate() {
            let vars = self.clause_vars[ci];
            if vars != clause.variables() {
                return Err(ReductionError::FormulaMismatch(format!(
                    "clause {} has variables {:?} in the graph, {:?} in the formula",
                    ci + 1,
                    vars,
                    clause.variables()
                )));
            }
        }
        for b in &self.blocks {
            for (ci, clause) in f.clauses().iter().enumerate() {
                for (pos, lit) in clause.literals().iter().enumerate() {
                    let xc = b.var_clause_vertices[ci][pos];
                    let side = if lit.positive { b.vplus } else { b.vminus };
                    if !self.graph.has_edge(xc, side) {
                        return Err(ReductionError::FormulaMismatch(format!(
                            "block ({}) clause {} literal {} has the wrong sign edge",
                            b.id,
                            ci + 1,
                            lit
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Registry sidecar: `b i j vplus vminus`, then the block's `x`, `xc` and `q`
/// lines, block after block in registry order.
pub fn write_registry(rg: &ReductionGraph) -> String {
    let mut out = String::new();
    for b in &rg.blocks {
        let (i, j) = (b.id.layer, b.id.index);
        let _ = writeln!(out, "b {i} {j} {} {}", b.vplus, b.vminus);
        for (k, &x) in b.var_vertices.iter().enumerate() {
            let _ = writeln!(out, "x {i} {j} {} {x}", k + 1);
        }
        for ci in 0..rg.clause_count {
            let vars = rg.clause_vars[ci];
            for (pos, &x) in b.var_clause_vertices[ci].iter().enumerate() {
                let _ = writeln!(out, "xc {i} {j} {} {} {x}", vars[pos], ci + 1);
            }
        }
        for (ci, qs) in b.q_vertices.iter().enumerate() {
            for (r, &q) in qs.iter().enumerate() {
                let _ = writeln!(out, "q {i} {j} {} {} {q}", ci + 1, r + 1);
            }
        }
    }
    out
}

#[derive(Default)]
struct PartialBlock {
    vplus: Vertex,
    vminus: Vertex,
    vars: Vec<(usize, Vertex)>,
    xcs: Vec<(usize, usize, Vertex)>,
    qs: Vec<(usize, usize, Vertex)>,
}

impl ReductionGraph {
    /// Reassembles a reduction graph from a labeled graph file and its
    /// registry sidecar, then checks the structure edge by edge.
    pub fn from_parts(graph: Graph, registry: &str) -> Result<Self, ReductionError> {
        let reg_err = |line: usize, message: String| ReductionError::Registry { line, message };
        let mut order: Vec<BlockId> = Vec::new();
        let mut partial: HashMap<BlockId, PartialBlock> = HashMap::new();
        for (idx, raw) in registry.lines().enumerate() {
            let line = idx + 1;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let nums = toks[1..]
                .iter()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| reg_err(line, format!("non-numeric field in `{raw}`")))?;
            let arity = match toks[0] {
                "b" | "x" => 4,
                "xc" | "q" => 5,
                other => return Err(reg_err(line, format!("unknown line prefix `{other}`"))),
            };
            if nums.len() != arity {
                return Err(reg_err(line, format!("expected {arity} fields, got {}", nums.len())));
            }
            let id = BlockId::new(nums[0], nums[1]);
            if toks[0] == "b" {
                if partial.contains_key(&id) {
                    return Err(reg_err(line, format!("block ({id}) declared twice")));
                }
                order.push(id);
                partial.insert(id, PartialBlock { vplus: nums[2], vminus: nums[3], ..Default::default() });
                continue;
            }
            let block = partial
                .get_mut(&id)
                .ok_or_else(|| reg_err(line, format!("block ({id}) used before its `b` line")))?;
            match toks[0] {
                "x" => block.vars.push((nums[2], nums[3])),
                "xc" => block.xcs.push((nums[2], nums[3], nums[4])),
                _ => block.qs.push((nums[2], nums[3], nums[4])),
            }
        }
        if order.is_empty() {
            return Err(reg_err(0, "registry lists no blocks".into()));
        }
        let first = &partial[&order[0]];
        let n = first.vars.len();
        let m = first.qs.len() / Q_PER_CLAUSE;
        let mut blocks = Vec::with_capacity(order.len());
        let mut clause_vars: Option<Vec<[usize; 3]>> = None;
        for id in &order {
            let p = &partial[id];
            let bad = |what: &str| ReductionError::Inconsistent(format!("block ({id}): {what}"));
            if p.vars.len() != n || p.qs.len() != m * Q_PER_CLAUSE || p.xcs.len() != 3 * m {
                return Err(bad("vertex counts differ from block (1,1)"));
            }
            let mut var_vertices = vec![usize::MAX; n];
            for &(var, v) in &p.vars {
                if var == 0 || var > n || var_vertices[var - 1] != usize::MAX {
                    return Err(bad("bad variable index"));
                }
                var_vertices[var - 1] = v;
            }
            let mut q_vertices = vec![[usize::MAX; Q_PER_CLAUSE]; m];
            for &(c, r, v) in &p.qs {
                if c == 0 || c > m || r == 0 || r > Q_PER_CLAUSE || q_vertices[c - 1][r - 1] != usize::MAX {
                    return Err(bad("bad q index"));
                }
                q_vertices[c - 1][r - 1] = v;
            }
            let mut var_clause_vertices = vec![[usize::MAX; 3]; m];
            let mut vars_seen = vec![[0usize; 3]; m];
            let mut filled = vec![0usize; m];
            for &(var, c, v) in &p.xcs {
                if c == 0 || c > m || filled[c - 1] == 3 {
                    return Err(bad("bad clause index"));
                }
                var_clause_vertices[c - 1][filled[c - 1]] = v;
                vars_seen[c - 1][filled[c - 1]] = var;
                filled[c - 1] += 1;
            }
            match &clause_vars {
                None => clause_vars = Some(vars_seen),
                Some(cv) if *cv != vars_seen => return Err(bad("clause variables differ from block (1,1)")),
                Some(_) => {}
            }
            blocks.push(BlockInfo {
                id: *id,
                vplus: p.vplus,
                vminus: p.vminus,
                var_vertices,
                var_clause_vertices,
                q_vertices,
                attachment: Attachment::Path,
            });
        }

        // Attachments: a block's v⊕ is a q vertex of its parent.
        let mut q_owner: HashMap<Vertex, (BlockId, usize, usize)> = HashMap::new();
        for b in &blocks {
            for (ci, qs) in b.q_vertices.iter().enumerate() {
                for (r, &q) in qs.iter().enumerate() {
                    q_owner.insert(q, (b.id, ci, r + 1));
                }
            }
        }
        for b in &mut blocks {
            if b.id == BlockId::new(1, 1) {
                continue;
            }
            let &(parent, clause, r) = q_owner
                .get(&b.vplus)
                .ok_or_else(|| ReductionError::Inconsistent(format!("block ({}) is not glued to a q vertex", b.id)))?;
            b.attachment = Attachment::Block { parent, clause, r };
        }

        let find = |label: &str| {
            graph
                .find_label(label)
                .ok_or_else(|| ReductionError::Inconsistent(format!("graph has no vertex labeled `{label}`")))
        };
        let path = [blocks[0].vplus, find("p1")?, find("v")?, find("p2")?, blocks[0].vminus];
        let mut layer_sizes: Vec<usize> = Vec::new();
        for b in &blocks {
            if b.id.layer > layer_sizes.len() {
                layer_sizes.push(0);
            }
            layer_sizes[b.id.layer - 1] += 1;
        }
        let index = blocks.iter().enumerate().map(|(k, b)| (b.id, k)).collect();
        let rg = ReductionGraph {
            graph,
            path,
            blocks,
            index,
            layer_sizes,
            variable_count: n,
            clause_count: m,
            clause_vars: clause_vars.unwrap_or_default(),
        };
        rg.validate_structure()?;
        Ok(rg)
    }

    /// Verifies the registry against the graph: block layout, glue points,
    /// every gadget edge present, and no edges beyond them.
    pub fn validate_structure(&self) -> Result<(), ReductionError> {
        let bad = |msg: String| Err(ReductionError::Inconsistent(msg));
        let (n, m) = (self.variable_count, self.clause_count);
        if m == 0 || self.blocks[0].id != BlockId::new(1, 1) {
            return bad("block (1,1) must come first".into());
        }
        let expected = exact_size(n, m, self.height())?;
        if self.graph.vertex_count() as u128 != expected.vertices || self.graph.edge_count() as u128 != expected.edges {
            return bad(format!(
                "graph has {} vertices / {} edges, a height-{} reduction has {} / {}",
                self.graph.vertex_count(),
                self.graph.edge_count(),
                self.height(),
                expected.vertices,
                expected.edges
            ));
        }
        for (k, &b) in self.layer_sizes.iter().enumerate() {
            if expected.per_layer[k] != b as u128 {
                return bad(format!("layer {} has {b} blocks, expected {}", k + 1, expected.per_layer[k]));
            }
        }
        let [q1, p1, v, p2, q2] = self.path;
        if !(self.graph.has_edge(q1, p1) && self.graph.has_edge(p1, v) && self.graph.has_edge(v, p2) && self.graph.has_edge(p2, q2)) {
            return bad("starting path q1 p1 v p2 q2 missing".into());
        }
        let vertex_ok = |x: Vertex| x < self.graph.vertex_count();
        for b in &self.blocks {
            if !b.vertices().all(vertex_ok) {
                return bad(format!("block ({}) references a vertex out of range", b.id));
            }
            match b.attachment {
                Attachment::Path => {
                    if b.id != BlockId::new(1, 1) {
                        return bad(format!("block ({}) has no parent", b.id));
                    }
                }
                Attachment::Block { parent, clause, r } => {
                    let p = self.block(parent)?;
                    if parent.layer + 1 != b.id.layer
                        || r >= Q_PER_CLAUSE
                        || p.q_vertex(clause, r) != b.vplus
                        || p.q_vertex(clause, r + 1) != b.vminus
                    {
                        return bad(format!("block ({}) is not glued to a consecutive q pair", b.id));
                    }
                }
            }
            for &x in &b.var_vertices {
                if !self.graph.has_edge(x, b.vplus) || !self.graph.has_edge(x, b.vminus) {
                    return bad(format!("block ({}): variable vertex {x} lacks a glue edge", b.id));
                }
            }
            for ci in 0..m {
                let xc = b.var_clause_vertices[ci];
                for &x in &xc {
                    if self.graph.has_edge(x, b.vplus) == self.graph.has_edge(x, b.vminus) {
                        return bad(format!("block ({}): vertex {x} must join exactly one glue vertex", b.id));
                    }
                }
                let vars = self.clause_vars[ci];
                if vars.contains(&0) || vars.iter().any(|&x| x > n) {
                    return bad(format!("clause {} has a variable outside 1..={n}", ci + 1));
                }
                let g = b.g_array(ci, vars);
                for (k, row) in MATRIX_M.iter().enumerate() {
                    for (l, &bit) in row.iter().enumerate() {
                        if bit == 1 && !self.graph.has_edge(g[k], b.q_vertices[ci][l]) {
                            return bad(format!("block ({}): matrix edge missing at clause {}", b.id, ci + 1));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Exact size of `build_reduction` for `n` variables, `m` clauses and
/// height `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactSize {
    /// `b(i)` for `i = 1..=h`.
    pub per_layer: Vec<u128>,
    pub blocks: u128,
    pub vertices: u128,
    pub edges: u128,
}

/// Vertex/edge counts without the bound's preconditions.
pub fn exact_size(n: usize, m: usize, h: usize) -> Result<ExactSize, ReductionError> {
    let (n, m) = (n as u128, m as u128);
    let fan_out = 7 * m;
    let mut per_layer = Vec::with_capacity(h);
    let mut b = 1u128;
    for _ in 0..h {
        per_layer.push(b);
        b = b.checked_mul(fan_out).ok_or(ReductionError::Overflow)?;
    }
    let blocks: u128 = per_layer.iter().try_fold(0u128, |acc, &x| acc.checked_add(x)).ok_or(ReductionError::Overflow)?;
    let vertices = blocks
        .checked_mul(n + 11 * m)
        .and_then(|x| x.checked_add(5))
        .ok_or(ReductionError::Overflow)?;
    let edges = blocks
        .checked_mul(2 * n + 27 * m)
        .and_then(|x| x.checked_add(4))
        .ok_or(ReductionError::Overflow)?;
    Ok(ExactSize { per_layer, blocks, vertices, edges })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeBounds {
    pub exact: ExactSize,
    /// `(n + 88 n^3) ((56 n^3)^h - 1) / (56 n^3 - 1) + 5`.
    pub upper_bound: u128,
}

pub fn size_bounds(n: usize, m: usize, h: usize) -> Result<SizeBounds, ReductionError> {
    let n3 = (n as u128).pow(3);
    if n < 3 {
        return Err(ReductionError::BadParameters(format!("n = {n} < 3")));
    }
    if m == 0 || m as u128 > 8 * n3 {
        return Err(ReductionError::BadParameters(format!("m = {m} outside 1..=8n^3")));
    }
    if h <= 1 {
        return Err(ReductionError::HeightTooSmall(h));
    }
    let exact = exact_size(n, m, h)?;
    // (r^h - 1) / (r - 1) as the geometric sum 1 + r + ... + r^{h-1}.
    let ratio = 56 * n3;
    let mut term = 1u128;
    let mut geometric = 0u128;
    for _ in 0..h {
        geometric = geometric.checked_add(term).ok_or(ReductionError::Overflow)?;
        term = term.checked_mul(ratio).ok_or(ReductionError::Overflow)?;
    }
    let upper_bound = (n as u128 + 88 * n3)
        .checked_mul(geometric)
        .and_then(|x| x.checked_add(5))
        .ok_or(ReductionError::Overflow)?;
    Ok(SizeBounds { exact, upper_bound })
}

/// Outcome of the exhaustive check of [`MATRIX_M`]'s two properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixReport {
    /// Rows (1,2), (3,4), (5,6) are complements of each other.
    pub complementary_pairs: bool,
    /// Row subsets (as 6-bit masks, bit k = row k+1) whose columnwise OR is
    /// all ones.
    pub covering_subsets: Vec<u8>,
    /// Covering subsets that contain no complementary pair.
    pub counterexamples: Vec<u8>,
}

impl MatrixReport {
    pub fn holds(&self) -> bool {
        self.complementary_pairs && self.counterexamples.is_empty()
    }
}

/// Columnwise OR of the rows selected by `mask` (bit k = row k+1).
pub fn row_union(mask: u8) -> [u8; 8] {
    let mut acc = [0u8; 8];
    for (k, row) in MATRIX_M.iter().enumerate() {
        if mask & (1 << k) != 0 {
            for (a, &x) in acc.iter_mut().zip(row) {
                *a |= x;
            }
        }
    }
    acc
}

fn complementary(a: usize, b: usize) -> bool {
    MATRIX_M[a].iter().zip(&MATRIX_M[b]).all(|(x, y)| x ^ y == 1)
}

/// Sweeps all 64 row subsets.
pub fn verify_matrix_m_properties() -> MatrixReport {
    let complementary_pairs = (0..3).all(|p| complementary(2 * p, 2 * p + 1));
    let mut covering_subsets = Vec::new();
    let mut counterexamples = Vec::new();
    for mask in 0u8..64 {
        if row_union(mask).iter().all(|&x| x == 1) {
            covering_subsets.push(mask);
            let has_pair = (0..6).any(|a| {
                (a + 1..6).any(|b| mask & (1 << a) != 0 && mask & (1 << b) != 0 && complementary(a, b))
            });
            if !has_pair {
                counterexamples.push(mask);
            }
        }
    }
    MatrixReport {
        complementary_pairs,
        covering_subsets,
        counterexamples,
    }
}

/// Sorted edge list touching only `vertices`, used by tests and the
/// witness builder.
pub(crate) fn induced_edges(g: &Graph, vertices: &[Vertex]) -> Vec<Edge> {
    let mut out = Vec::new();
    for (k, &a) in vertices.iter().enumerate() {
        for &b in &vertices[k + 1..] {
            if g.has_edge(a, b) {
                out.push(Edge::new(a, b));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::bfs_distances;

    fn phi1() -> Formula {
        Formula::from_triples(3, &[[1, 2, -3]]).unwrap()
    }

    #[test]
    fn matrix_rows_match_literal_values() {
        let rows = ["11110000", "00001111", "11001100", "00110011", "10101010", "01010101"];
        for (row, text) in MATRIX_M.iter().zip(rows) {
            let s: String = row.iter().map(|b| char::from(b'0' + b)).collect();
            assert_eq!(s, text);
        }
        assert!(MATRIX_M.iter().all(|r| r.iter().filter(|&&b| b == 1).count() == 4));
    }

    #[test]
    fn matrix_properties() {
        let report = verify_matrix_m_properties();
        assert!(report.holds());
        // Rows {1,2} cover; rows {1,3,5} miss column 8.
        assert!(report.covering_subsets.contains(&0b000011));
        assert_eq!(row_union(0b010101), [1, 1, 1, 1, 1, 1, 1, 0]);
        assert!(!report.covering_subsets.contains(&0b010101));
    }

    #[test]
    fn single_block_counts_and_adjacency() {
        let (g, b) = get_bb(&phi1(), 1, 1).unwrap();
        assert_eq!(g.vertex_count(), 16);
        assert_eq!(g.edge_count(), 33);
        let x1 = b.var_vertex(1);
        let xc = b.var_clause_vertices[0];
        let q = b.q_vertices[0];
        for r in 0..8 {
            assert_eq!(g.has_edge(x1, q[r]), r < 4);
            assert_eq!(g.has_edge(xc[0], q[r]), r >= 4);
        }
        // Row 5 belongs to the third variable's Var vertex.
        let w = b.var_vertex(3);
        let adj: Vec<usize> = (1..=8).filter(|&r| g.has_edge(w, q[r - 1])).collect();
        assert_eq!(adj, vec![1, 3, 5, 7]);
        assert!(g.has_edge(xc[2], b.vminus));
        assert!(!g.has_edge(xc[2], b.vplus));
        assert!(g.has_edge(xc[0], b.vplus));
        assert!(induced_edges(&g, &q).is_empty());
        assert!(induced_edges(&g, &b.var_vertices).is_empty());
    }

    #[test]
    fn get_bb_is_deterministic() {
        let f = Formula::from_triples(5, &[[1, -4, 5], [2, 3, -1]]).unwrap();
        assert_eq!(get_bb(&f, 2, 3).unwrap(), get_bb(&f, 2, 3).unwrap());
        let (g, _) = get_bb(&f, 2, 3).unwrap();
        assert_eq!(g.vertex_count(), 2 + 5 + 22);
        assert_eq!(g.edge_count(), block_edges(5, 2));
    }

    #[test]
    fn reduction_counts_phi1() {
        let rg = build_reduction(&phi1(), 2).unwrap();
        assert_eq!(rg.layer_sizes(), &[1, 7]);
        assert_eq!(rg.graph().vertex_count(), 117);
        assert_eq!(rg.graph().edge_count(), 268);
        assert!(rg.graph().is_connected());
        rg.validate_structure().unwrap();
        rg.check_formula(&phi1()).unwrap();
    }

    #[test]
    fn height_must_exceed_one() {
        assert_eq!(build_reduction(&phi1(), 1).unwrap_err(), ReductionError::HeightTooSmall(1));
    }

    #[test]
    fn distances_from_center() {
        let rg = build_reduction(&phi1(), 2).unwrap();
        let d = bfs_distances(rg.graph(), rg.center()).unwrap();
        let b = rg.block(BlockId::new(1, 1)).unwrap();
        assert_eq!(d[b.vplus], 2);
        assert_eq!(d[b.vminus], 2);
        assert_eq!(d[b.var_vertex(1)], 3);
        assert!(b.var_clause_vertices[0].iter().all(|&x| d[x] == 3));
        assert!(b.q_vertices[0].iter().all(|&x| d[x] == 4));
        for child in rg.layer(2) {
            assert_eq!(d[child.vplus], 4);
            assert!(child.var_vertices.iter().all(|&x| d[x] == 5));
            assert!(child.q_vertices.iter().flatten().all(|&x| d[x] == 6));
        }
    }

    #[test]
    fn attachment_follows_clause_and_r() {
        let f = Formula::from_triples(4, &[[1, 2, 3], [-2, 3, 4]]).unwrap();
        let rg = build_reduction(&f, 2).unwrap();
        let root = rg.block(BlockId::new(1, 1)).unwrap();
        assert_eq!(rg.layer_sizes(), &[1, 14]);
        for child in rg.layer(2) {
            let Attachment::Block { parent, clause, r } = child.attachment else {
                panic!("layer 2 block without parent");
            };
            assert_eq!(parent, root.id);
            assert_eq!(child.id.index, clause * 7 + r);
            assert_eq!(child.vplus, root.q_vertex(clause, r));
            assert_eq!(child.vminus, root.q_vertex(clause, r + 1));
            assert_eq!(rg.child(parent, clause, r).unwrap().id, child.id);
        }
        // No block spans q8 of clause 1 and q1 of clause 2.
        let q8 = root.q_vertex(0, 8);
        let q1_next = root.q_vertex(1, 1);
        assert!(!rg.blocks().iter().any(|b| b.vplus == q8 && b.vminus == q1_next));
    }

    #[test]
    fn identified_vertices_carry_both_roles() {
        let rg = build_reduction(&phi1(), 2).unwrap();
        let child = rg.block(BlockId::new(2, 3)).unwrap();
        let roles = rg.roles(child.vplus);
        assert!(roles.contains(&VertexLabel::Q { r: 3, clause: 1, block: BlockId::new(1, 1) }));
        assert!(roles.contains(&VertexLabel::VPlus(BlockId::new(2, 3))));
        assert!(roles.contains(&VertexLabel::VMinus(BlockId::new(2, 2))));
        assert_eq!(rg.roles(0), vec![VertexLabel::PathQ1, VertexLabel::VPlus(BlockId::new(1, 1))]);
    }

    #[test]
    fn labels_round_trip() {
        let rg = build_reduction(&phi1(), 2).unwrap();
        for v in 0..rg.graph().vertex_count() {
            let text = rg.graph().label(v).unwrap();
            let label: VertexLabel = text.parse().unwrap();
            assert_eq!(label.to_string(), text);
            assert_eq!(rg.roles(v)[0], label);
        }
    }

    #[test]
    fn registry_round_trip() {
        let f = Formula::from_triples(4, &[[1, 2, 3], [-2, 3, 4]]).unwrap();
        let rg = build_reduction(&f, 2).unwrap();
        let text = write_registry(&rg);
        let back = ReductionGraph::from_parts(rg.graph().clone(), &text).unwrap();
        assert_eq!(back.blocks(), rg.blocks());
        assert_eq!(back.path(), rg.path());
        assert_eq!(write_registry(&back), text);
        back.check_formula(&f).unwrap();
        let other = Formula::from_triples(4, &[[1, 2, 3], [2, 3, 4]]).unwrap();
        assert!(matches!(back.check_formula(&other), Err(ReductionError::FormulaMismatch(_))));
    }

    #[test]
    fn registry_rejects_garbage() {
        let rg = build_reduction(&phi1(), 2).unwrap();
        let g = rg.graph().clone();
        assert!(matches!(
            ReductionGraph::from_parts(g.clone(), "z 1 1 0 4\n"),
            Err(ReductionError::Registry { line: 1, .. })
        ));
        let mut text = write_registry(&rg);
        text = text.replacen("b 2 1 ", "b 2 1 9", 1);
        assert!(ReductionGraph::from_parts(g, &text).is_err());
    }

    #[test]
    fn size_accounting() {
        let s = size_bounds(3, 1, 2).unwrap();
        assert_eq!(s.exact.vertices, 117);
        assert_eq!(s.exact.edges, 268);
        assert_eq!(s.upper_bound, 2379 * 1513 + 5);
        let s8 = size_bounds(3, 8, 2).unwrap();
        assert_eq!(s8.exact.vertices, 5192);
        assert!(s8.exact.vertices <= s8.upper_bound);
        let s3 = size_bounds(3, 8, 3).unwrap();
        assert_eq!(s3.exact.per_layer, vec![1, 56, 3136]);
        assert_eq!((s3.exact.vertices - s8.exact.vertices) / 91, 3136);
        assert!(size_bounds(2, 1, 2).is_err());
        assert!(size_bounds(3, 217, 2).is_err());
        assert!(size_bounds(3, 1, 1).is_err());
    }
}
