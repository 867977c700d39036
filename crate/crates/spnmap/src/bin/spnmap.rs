//! Command-line front end: validate/evaluate/reduce/compile/solve/benchmark.
//!
//! Machine-readable results go to stdout; diagnostics go to stderr. Exit
//! codes: 0 success, 1 input or validation failure, 2 usage error (clap).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spnmap::bench::{generate_problems, run_benchmark, write_report, SolverSpec};
use spnmap::{
    argmax_product, beam_search, best_tree, bn_to_spn_with_stats, evaluate, k_best_trees,
    map_to_max, max_exact, normalized_greedy, parse_bn, parse_problem, parse_problems, parse_spn,
    serialize_spn, simplify, BeamInit, Initializer, MapProblem, PartialEvidence, Pruning,
    SearchConfig, SolveResult, Spn,
};

#[derive(Parser)]
#[command(name = "spnmap", version, about = "MAP/MAX inference on sum-product networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check structural validity (completeness, decomposability, reachability)
    Validate {
        #[arg(long)]
        spn: PathBuf,
    },
    /// Evaluate the network at an assignment; unmentioned variables are
    /// marginalized
    Eval {
        #[arg(long)]
        spn: PathBuf,
        /// Comma-separated pairs like "x0=1,x3=0" (or "0=1,3=0"); omit for
        /// the full marginal
        #[arg(long)]
        at: Option<String>,
        #[command(flatten)]
        fmt: FormatOpts,
    },
    /// Reduce a MAP problem to a MAX problem and print the reduced network
    Reduce {
        #[arg(long)]
        spn: PathBuf,
        /// Problem line: q:<list|-> e:<var>=<val>,...|- h:<list|->
        #[arg(long)]
        problem: String,
        /// Also run the semantics-preserving cleanup pass
        #[arg(long)]
        simplify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a tree-structured Bayesian network to an SPN
    Bn2spn {
        #[arg(long)]
        bn: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the highest-scoring complete assignment
    Max {
        #[arg(long)]
        spn: PathBuf,
        #[command(flatten)]
        solver: SolverOpts,
        #[command(flatten)]
        fmt: FormatOpts,
    },
    /// Solve a MAP problem: reduce, then maximize over the query variables
    Map {
        #[arg(long)]
        spn: PathBuf,
        /// Problem line: q:<list|-> e:<var>=<val>,...|- h:<list|->
        #[arg(long)]
        problem: String,
        #[command(flatten)]
        solver: SolverOpts,
        #[command(flatten)]
        fmt: FormatOpts,
    },
    /// Run a solver suite over generated (or supplied) MAP problems
    Bench {
        #[arg(long)]
        spn: PathBuf,
        /// Relative sizes of the query/evidence/hidden blocks, e.g. 3,3,4
        #[arg(long, default_value = "3,3,4")]
        proportions: String,
        /// Number of generated problems
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated solver tokens: bt, ng, amap, bs<K>, kbt<K>, mc,
        /// fc, fc+o, fc+o+s
        #[arg(long, default_value = "bt,ng,bs10,amap,kbt10,fc+o+s")]
        solvers: String,
        /// Per-run time budget in seconds
        #[arg(long)]
        budget: Option<f64>,
        /// Write the CSV report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Read problems from a file (one problem line each) instead of
        /// generating them
        #[arg(long)]
        problems: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FormatOpts {
    /// Print scores with this many significant digits instead of the
    /// shortest exact representation
    #[arg(long)]
    digits: Option<usize>,
}

impl FormatOpts {
    fn score(&self, score: f64) -> String {
        match self.digits {
            Some(d) => format!("{:.*e}", d.saturating_sub(1), score),
            None => format!("{score}"),
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    /// Best parse tree (max-product)
    Bt,
    /// Normalized greedy descent
    Ng,
    /// Beam search over single-variable mutations
    Bs,
    /// Argmax-product bottom-up candidates
    Amap,
    /// K best parse trees, rescored
    Kbt,
    /// Anytime exact branch-and-bound
    Exact,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PruningKind {
    Mc,
    Fc,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum InitKind {
    /// All-zeros assignment
    First,
    /// Seeded random assignment
    Random,
    /// Best-tree approximation
    Bt,
}

#[derive(Args)]
struct SolverOpts {
    #[arg(long, value_enum, default_value_t = SolverKind::Exact)]
    solver: SolverKind,
    /// K for the kbt solver / beam width for bs
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Seed for bs and --init random
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PruningKind::Fc)]
    pruning: PruningKind,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    ordering: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    staging: bool,
    #[arg(long, default_value_t = 4)]
    stage_interval: usize,
    /// Time budget in seconds (exact solver only)
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitKind::Bt)]
    init: InitKind,
}

impl SolverOpts {
    fn search_config(&self) -> SearchConfig {
        SearchConfig {
            pruning: match self.pruning {
                PruningKind::Mc => Pruning::Marginal,
                PruningKind::Fc => Pruning::Forward,
            },
            ordering: self.ordering,
            staging: self.staging,
            stage_interval: self.stage_interval,
            time_budget: self.budget.map(Duration::from_secs_f64),
            initializer: match self.init {
                InitKind::First => Initializer::FirstAssignment,
                InitKind::Random => Initializer::Random(self.seed),
                InitKind::Bt => Initializer::BestTree,
            },
            trace_prunes: false,
        }
    }

    fn run(&self, spn: &Spn) -> SolveResult {
        match self.solver {
            SolverKind::Bt => best_tree(spn),
            SolverKind::Ng => normalized_greedy(spn),
            SolverKind::Bs => beam_search(spn, self.k, self.seed, BeamInit::Random),
            SolverKind::Amap => argmax_product(spn),
            SolverKind::Kbt => k_best_trees(spn, self.k),
            SolverKind::Exact => max_exact(spn, &self.search_config()),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_spn(path: &PathBuf) -> Result<Spn, String> {
    parse_spn(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// "x0=1,x3=0" (the x prefix is optional) to (var, value) pairs.
fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>, String> {
    text.split(',')
        .filter(|item| !item.is_empty())
        .map(|item| {
            let (var, value) = item
                .split_once('=')
                .ok_or_else(|| format!("expected '<var>=<val>', got '{item}'"))?;
            let var = var.trim().trim_start_matches('x');
            let var: usize = var.parse().map_err(|_| format!("bad variable index '{var}'"))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| format!("bad value '{}'", value.trim()))?;
            Ok((var, value))
        })
        .collect()
}

fn print_result(result: &SolveResult, vars: &[usize], fmt: &FormatOpts) {
    let mut line = String::new();
    for &v in vars {
        write!(line, "x{v}={} ", result.assignment[v]).unwrap();
    }
    write!(
        line,
        "score={} status={} time_ms={:.3}",
        fmt.score(result.score),
        result.status.as_str(),
        result.elapsed.as_secs_f64() * 1e3
    )
    .unwrap();
    println!("{line}");
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Validate { spn } => {
            let spn = load_spn(&spn)?;
            println!(
                "ok: {} variables, {} nodes, {} arcs",
                spn.num_vars(),
                spn.num_nodes(),
                spn.num_arcs()
            );
            Ok(())
        }
        Command::Eval { spn, at, fmt } => {
            let spn = load_spn(&spn)?;
            let mut x = PartialEvidence::full(spn.vars());
            for (var, value) in parse_pairs(at.as_deref().unwrap_or(""))? {
                if var >= spn.num_vars() || value >= spn.vars().card(var) {
                    return Err(format!("x{var}={value} is out of range"));
                }
                x = x.fix(var, value);
            }
            let score = evaluate(&spn, &x).map_err(|e| e.to_string())?;
            println!("{}", fmt.score(score));
            Ok(())
        }
        Command::Reduce { spn, problem, simplify: clean, out } => {
            let spn = load_spn(&spn)?;
            let problem: MapProblem =
                parse_problem(&problem, spn.vars()).map_err(|e| e.to_string())?;
            let mut reduced = map_to_max(&spn, &problem);
            if clean {
                reduced = simplify(&reduced);
            }
            eprintln!(
                "reduced: {} nodes, {} arcs (from {} nodes, {} arcs)",
                reduced.num_nodes(),
                reduced.num_arcs(),
                spn.num_nodes(),
                spn.num_arcs()
            );
            emit(&out, &serialize_spn(&reduced))
        }
        Command::Bn2spn { bn, out } => {
            let bn = parse_bn(&read(&bn)?).map_err(|e| e.to_string())?;
            let (spn, stats) = bn_to_spn_with_stats(&bn);
            eprintln!(
                "compiled: {} nodes, {} arcs, cache entries {}, cache hits {}",
                spn.num_nodes(),
                spn.num_arcs(),
                stats.cache_entries,
                stats.cache_hits
            );
            emit(&out, &serialize_spn(&spn))
        }
        Command::Max { spn, solver, fmt } => {
            let spn = load_spn(&spn)?;
            let result = solver.run(&spn);
            print_result(&result, &(0..spn.num_vars()).collect::<Vec<_>>(), &fmt);
            Ok(())
        }
        Command::Map { spn, problem, solver, fmt } => {
            let spn = load_spn(&spn)?;
            let problem: MapProblem =
                parse_problem(&problem, spn.vars()).map_err(|e| e.to_string())?;
            let reduced = map_to_max(&spn, &problem);
            let result = solver.run(&reduced);
            print_result(&result, problem.query(), &fmt);
            Ok(())
        }
        Command::Bench { spn, proportions, count, seed, solvers, budget, out, problems } => {
            let spn = load_spn(&spn)?;
            let problems: Vec<MapProblem> = match problems {
                Some(path) => parse_problems(&read(&path)?, spn.vars()).map_err(|e| e.to_string())?,
                None => {
                    let parts: Vec<f64> = proportions
                        .split(',')
                        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad proportion '{p}'")))
                        .collect::<Result<_, _>>()?;
                    let [q, e, h]: [f64; 3] = parts
                        .try_into()
                        .map_err(|_| "expected exactly three proportions, e.g. 3,3,4".to_string())?;
                    generate_problems(spn.vars(), [q, e, h], count, seed)
                }
            };
            let solvers: Vec<SolverSpec> = solvers
                .split(',')
                .map(|token| SolverSpec::parse(token.trim()).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            let budget = budget.map(Duration::from_secs_f64);
            let report = run_benchmark(&spn, &problems, &solvers, budget);
            let mut csv = Vec::new();
            write_report(&report, &mut csv).map_err(|e| e.to_string())?;
            match out {
                Some(path) => {
                    fs::write(&path, &csv).map_err(|e| format!("{}: {e}", path.display()))?;
                    eprintln!("wrote {} cells to {}", report.cells.len(), path.display());
                }
                None => std::io::stdout().write_all(&csv).map_err(|e| e.to_string())?,
            }
            Ok(())
        }
    }
}
