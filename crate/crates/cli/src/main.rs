use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use treespan::cnf::{parse_dimacs, Assignment, CnfError, Formula, ParseMode};
use treespan::decider::{
    decide_sat, extract_assignment, BestOfKProvider, BfsProvider, DeciderConfig, DeciderError, FileProvider, OracleProvider, Route,
    SpannerProvider, DEFAULT_MAX_VERTICES,
};
use treespan::graph::{
    is_bfs_tree, is_v_concentrated, max_stretch, parse_graph, parse_tree, write_graph, write_tree, Graph, SpanningTree, Vertex,
};
use treespan::oracles::{enumerate_v_concentrated_trees, exact_mmst, for_each_spanning_tree, OracleError, DEFAULT_CAP};
use treespan::reduction::{build_reduction, exact_size, size_bounds, verify_matrix_m_properties, write_registry, BlockId, ReductionError, ReductionGraph};
use treespan::witness::{tree_7_spanner, WitnessError};

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_PRECONDITION: u8 = 4;
const EXIT_PROVIDER: u8 = 5;
const EXIT_CAP: u8 = 6;
const EXIT_IO: u8 = 7;

#[derive(Parser, Debug)]
#[command(name = "treespan", version, about = "Reduction graphs and tree spanners concentrated at a vertex")]
struct Cli {
    /// Seed for every randomized choice
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the reduction graph of a 3-CNF formula
    Gen {
        cnf: PathBuf,
        #[arg(long)]
        h: usize,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        /// Drop duplicate literals and tautological clauses instead of failing
        #[arg(long)]
        normalize: bool,
    },
    /// Build the witness tree 7-spanner of a satisfying assignment
    Witness {
        cnf: PathBuf,
        graph: PathBuf,
        registry: PathBuf,
        /// Bit string, x1 first
        #[arg(long)]
        assignment: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        normalize: bool,
    },
    /// Measure a spanning tree against its host graph
    Verify {
        graph: PathBuf,
        tree: PathBuf,
        /// Vertex id or label; requires the tree to be concentrated there
        #[arg(long)]
        root: Option<String>,
        /// Require max stretch at most this
        #[arg(long)]
        t: Option<usize>,
        /// Also require a BFS tree from the root
        #[arg(long, requires = "root")]
        bfs: bool,
    },
    /// Read the assignment of one block off a tree
    Extract {
        graph: PathBuf,
        registry: PathBuf,
        tree: PathBuf,
        /// Block as `layer,index`
        #[arg(long)]
        block: String,
    },
    /// Decide satisfiability through the reduction
    Solve {
        cnf: PathBuf,
        /// bfs, best-of-k, oracle or file:<tree>
        #[arg(long, default_value = "bfs")]
        provider: String,
        #[arg(long, default_value_t = 1)]
        m: u32,
        /// Solve directly when the formula has at most this many variables
        #[arg(long, default_value_t = 20)]
        threshold: usize,
        /// Samples drawn by best-of-k
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
        max_vertices: u128,
        #[arg(long)]
        normalize: bool,
    },
    /// Brute-force ground truth on small graphs
    Oracle {
        #[arg(value_enum)]
        kind: OracleKind,
        graph: PathBuf,
        #[arg(long)]
        root: Option<String>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        /// Write the optimal tree here (mmst only)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact size and upper bound of a reduction graph, tab separated
    Stats {
        cnf: PathBuf,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        normalize: bool,
    },
    /// Check the gadget matrix properties
    Checkm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleKind {
    Mmst,
    Enumerate,
    Concentrated,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Display) -> Self {
        Failure { code, message: message.to_string() }
    }
}

fn cnf_failure(e: CnfError) -> Failure {
    match e {
        CnfError::Syntax { .. }
        | CnfError::MissingHeader
        | CnfError::ClauseCountMismatch { .. }
        | CnfError::NotThreeVariables { .. }
        | CnfError::VariableOutOfRange { .. }
        | CnfError::EmptyInstance
        | CnfError::InvalidBits(_) => Failure::new(EXIT_PARSE, e),
        _ => Failure::new(EXIT_PRECONDITION, e),
    }
}

fn reduction_failure(e: ReductionError) -> Failure {
    match e {
        ReductionError::Registry { .. } => Failure::new(EXIT_PARSE, e),
        _ => Failure::new(EXIT_PRECONDITION, e),
    }
}

fn oracle_failure(e: OracleError) -> Failure {
    match e {
        OracleError::CapExceeded { .. } => Failure::new(EXIT_CAP, e),
        OracleError::Graph(_) => Failure::new(EXIT_PRECONDITION, e),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_formula(path: &Path, normalize: bool) -> Result<Formula, Failure> {
    let mode = if normalize { ParseMode::Normalize } else { ParseMode::Strict };
    parse_dimacs(&read(path)?, mode).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    parse_graph(&read(path)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn load_reduction(graph: &Path, registry: &Path) -> Result<ReductionGraph, Failure> {
    ReductionGraph::from_parts(load_graph(graph)?, &read(registry)?).map_err(reduction_failure)
}

fn load_tree<'g>(host: &'g Graph, path: &Path) -> Result<SpanningTree<'g>, Failure> {
    let file = parse_tree(&read(path)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    file.into_tree(host).map_err(|e| Failure::new(EXIT_PRECONDITION, format!("{}: {e}", path.display())))
}

/// A vertex given by id or by label.
fn resolve_vertex(g: &Graph, spec: &str) -> Result<Vertex, Failure> {
    let v = match spec.parse::<Vertex>() {
        Ok(v) => v,
        Err(_) => g
            .find_label(spec)
            .ok_or_else(|| Failure::new(EXIT_PRECONDITION, format!("no vertex labeled `{spec}`")))?,
    };
    g.check_vertex(v).map_err(|e| Failure::new(EXIT_PRECONDITION, e))?;
    Ok(v)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Gen { cnf, h, output, registry, normalize } => {
            let f = load_formula(&cnf, normalize)?;
            let rg = build_reduction(&f, h).map_err(reduction_failure)?;
            emit(Some(&output), &write_graph(rg.graph()))?;
            emit(Some(&registry), &write_registry(&rg))?;
            println!("vertices\t{}", rg.graph().vertex_count());
            println!("edges\t{}", rg.graph().edge_count());
            println!("blocks\t{}", rg.blocks().len());
            Ok(0)
        }
        Command::Witness { cnf, graph, registry, assignment, output, normalize } => {
            let f = load_formula(&cnf, normalize)?;
            let rg = load_reduction(&graph, &registry)?;
            let a: Assignment = assignment.parse().map_err(cnf_failure)?;
            let w = tree_7_spanner(&rg, &f, &a).map_err(|e| match e {
                WitnessError::Cnf(e) => cnf_failure(e),
                e => Failure::new(EXIT_PRECONDITION, e),
            })?;
            emit(output.as_deref(), &write_tree(&w.tree))?;
            let z: Vec<String> = w.satisfiers.iter().map(|x| x.to_string()).collect();
            eprintln!("satisfiers\t{}", z.join(","));
            Ok(0)
        }
        Command::Verify { graph, tree, root, t, bfs } => {
            let g = load_graph(&graph)?;
            let tree = load_tree(&g, &tree)?;
            let report = max_stretch(&tree);
            let mut ok = true;
            println!("max_stretch\t{}", report.max_stretch);
            if let Some(e) = report.witness_edge {
                println!("witness_edge\t{e}");
            }
            if let Some(t) = t {
                let pass = report.max_stretch <= t;
                println!("tree_{t}_spanner\t{pass}");
                ok &= pass;
            }
            if let Some(root) = root {
                let v = resolve_vertex(&g, &root)?;
                let conc = is_v_concentrated(&tree, v).map_err(|e| Failure::new(EXIT_PRECONDITION, e))?;
                let is_bfs = is_bfs_tree(&tree, v).map_err(|e| Failure::new(EXIT_PRECONDITION, e))?;
                println!("v_concentrated\t{conc}");
                println!("bfs_tree\t{is_bfs}");
                ok &= conc && (!bfs || is_bfs);
            }
            Ok(if ok { 0 } else { EXIT_CHECKS_FAILED })
        }
        Command::Extract { graph, registry, tree, block } => {
            let rg = load_reduction(&graph, &registry)?;
            let tree = load_tree(rg.graph(), &tree)?;
            let id: BlockId = block.parse().map_err(|e| Failure::new(EXIT_PARSE, format!("--block: {e}")))?;
            let a = extract_assignment(&tree, &rg, id).map_err(reduction_failure)?;
            println!("{a}");
            Ok(0)
        }
        Command::Solve { cnf, provider, m, threshold, k, max_vertices, normalize } => {
            let f = load_formula(&cnf, normalize)?;
            let provider: Box<dyn SpannerProvider> = match provider.as_str() {
                "bfs" => Box::new(BfsProvider { seed: cli.seed }),
                "best-of-k" => Box::new(BestOfKProvider { k, seed: cli.seed }),
                "oracle" => Box::new(OracleProvider::default()),
                other => match other.strip_prefix("file:") {
                    Some(path) => {
                        let tree = parse_tree(&read(Path::new(path))?).map_err(|e| Failure::new(EXIT_PARSE, format!("{path}: {e}")))?;
                        Box::new(FileProvider { tree })
                    }
                    None => return Err(Failure::new(EXIT_PRECONDITION, format!("unknown provider `{other}`"))),
                },
            };
            let config = DeciderConfig { m_exponent: m, exhaustive_threshold: threshold, max_vertices };
            let trace = decide_sat(&f, provider.as_ref(), &config).map_err(|e| match e {
                DeciderError::ProviderFault { .. } => Failure::new(EXIT_PROVIDER, e),
                DeciderError::Cnf(e) => cnf_failure(e),
                e => Failure::new(EXIT_PRECONDITION, e),
            })?;
            println!("verdict\t{}", trace.verdict);
            match trace.route {
                Route::Exhaustive => println!("route\texhaustive"),
                Route::Reduction { h, vertices } => {
                    println!("route\treduction");
                    println!("h\t{h}");
                    println!("vertices\t{vertices}");
                    println!("blocks_examined\t{}", trace.per_block_assignments.len());
                }
            }
            if let Some(c) = trace.v_concentrated {
                println!("v_concentrated\t{c}");
            }
            if let Some(s) = trace.max_stretch {
                println!("max_stretch\t{s}");
            }
            for (layer, (block, d)) in &trace.chain_witnesses {
                println!("chain_layer_{layer}\t{block}\t{d}");
            }
            if let Some(e) = &trace.chain_error {
                println!("chain_error\t{e}");
            }
            Ok(0)
        }
        Command::Oracle { kind, graph, root, cap, output } => {
            let g = load_graph(&graph)?;
            match kind {
                OracleKind::Mmst => {
                    let (s, t) = exact_mmst(&g, cap).map_err(oracle_failure)?;
                    println!("mmst\t{s}");
                    if let Some(path) = output {
                        emit(Some(&path), &write_tree(&t))?;
                    }
                }
                OracleKind::Enumerate => {
                    let count = for_each_spanning_tree(&g, cap, |_| {}).map_err(oracle_failure)?;
                    println!("spanning_trees\t{count}");
                }
                OracleKind::Concentrated => {
                    let spec = root.ok_or_else(|| Failure::new(EXIT_PRECONDITION, "concentrated needs --root"))?;
                    let v = resolve_vertex(&g, &spec)?;
                    let trees = enumerate_v_concentrated_trees(&g, v, cap).map_err(oracle_failure)?;
                    println!("concentrated_trees\t{}", trees.len());
                    if let Some(best) = trees.iter().map(|t| max_stretch(t).max_stretch).min() {
                        println!("min_max_stretch\t{best}");
                    }
                }
            }
            Ok(0)
        }
        Command::Stats { cnf, h, normalize } => {
            let f = load_formula(&cnf, normalize)?;
            let (n, m) = (f.variable_count(), f.clause_count());
            let exact = exact_size(n, m, h).map_err(reduction_failure)?;
            println!("n\t{n}");
            println!("m\t{m}");
            println!("h\t{h}");
            for (i, b) in exact.per_layer.iter().enumerate() {
                println!("layer_{}_blocks\t{b}", i + 1);
            }
            println!("blocks\t{}", exact.blocks);
            println!("vertices\t{}", exact.vertices);
            println!("edges\t{}", exact.edges);
            match size_bounds(n, m, h) {
                Ok(b) => println!("vertex_bound\t{}", b.upper_bound),
                Err(e) => println!("vertex_bound\tn/a ({e})"),
            }
            Ok(0)
        }
        Command::Checkm => {
            let report = verify_matrix_m_properties();
            println!("complementary_rows\t{}", report.complementary_pairs);
            println!("covering_subsets\t{}", report.covering_subsets.len());
            println!("covering_without_complementary_pair\t{}", report.counterexamples.len());
            Ok(if report.holds() { 0 } else { EXIT_CHECKS_FAILED })
        }
    }
}
