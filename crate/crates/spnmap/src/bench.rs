//! Benchmark harness: generate MAP problem suites, run a set of solvers on
//! the reduced instances, and report per-cell and aggregate results as CSV.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::{argmax_product, beam_search, best_tree, k_best_trees, normalized_greedy, BeamInit};
use crate::exact::{max_exact, SearchConfig};
use crate::reduce::{map_to_max, MapProblem};
use crate::result::{SolveResult, SolveStatus};
use crate::spn::{Spn, VariableTable};

/// Split `seats` variables into |Q|/|E|/|H| by largest-remainder
/// apportionment of the given proportions; |Q| is forced to at least 1.
pub fn apportion(seats: usize, proportions: [f64; 3]) -> [usize; 3] {
    let total: f64 = proportions.iter().sum();
    assert!(total > 0.0, "proportions must not all be zero");
    let quotas: Vec<f64> = proportions.iter().map(|p| seats as f64 * p / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    // Hand out the leftover seats by largest remainder, ties to Q first.
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for i in 0..seats - assigned {
        counts[order[i % 3]] += 1;
    }
    if counts[0] == 0 {
        // Steal a seat for Q from the largest other block.
        let donor = if counts[2] >= counts[1] { 2 } else { 1 };
        counts[donor] -= 1;
        counts[0] += 1;
    }
    [counts[0], counts[1], counts[2]]
}

/// Deterministic suite of `count` MAP problems over `vars`: each problem
/// draws a fresh random Q/E/H partition of the apportioned sizes and random
/// evidence values.
pub fn generate_problems(
    vars: &VariableTable,
    proportions: [f64; 3],
    count: usize,
    seed: u64,
) -> Vec<MapProblem> {
    let [nq, ne, _] = apportion(vars.num_vars(), proportions);
    (0..count)
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_add((i as u64).wrapping_mul(0x9e3779b97f4a7c15)));
            let mut order: Vec<usize> = (0..vars.num_vars()).collect();
            for j in (1..order.len()).rev() {
                let k = rng.gen_range(0..=j);
                order.swap(j, k);
            }
            let query = order[..nq].to_vec();
            let evidence: Vec<(usize, usize)> = order[nq..nq + ne]
                .iter()
                .map(|&v| (v, rng.gen_range(0..vars.card(v))))
                .collect();
            let hidden = order[nq + ne..].to_vec();
            MapProblem::new(vars, query, evidence, hidden).expect("partition is valid by construction")
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum SolverSpec {
    BestTree,
    NormalizedGreedy,
    BeamSearch { k: usize, seed: u64 },
    ArgmaxProduct,
    KBestTrees { k: usize },
    Exact(SearchConfig),
}

#[derive(Debug, thiserror::Error)]
#[error("unknown solver token: {0}")]
pub struct SolverParseError(pub String);

impl SolverSpec {
    pub fn label(&self) -> String {
        match self {
            SolverSpec::BestTree => "bt".into(),
            SolverSpec::NormalizedGreedy => "ng".into(),
            SolverSpec::BeamSearch { k, .. } => format!("bs{k}"),
            SolverSpec::ArgmaxProduct => "amap".into(),
            SolverSpec::KBestTrees { k } => format!("kbt{k}"),
            SolverSpec::Exact(config) => {
                let mut label = match config.pruning {
                    crate::exact::Pruning::Marginal => "mc".to_string(),
                    crate::exact::Pruning::Forward => "fc".to_string(),
                };
                if config.ordering {
                    label.push_str("+o");
                }
                if config.staging {
                    label.push_str("+s");
                }
                label
            }
        }
    }

    /// Inverse of `label`: bt | ng | amap | bs<K> | kbt<K> | mc | fc | fc+o |
    /// fc+o+s.
    pub fn parse(token: &str) -> Result<Self, SolverParseError> {
        match token {
            "bt" => return Ok(SolverSpec::BestTree),
            "ng" => return Ok(SolverSpec::NormalizedGreedy),
            "amap" => return Ok(SolverSpec::ArgmaxProduct),
            "mc" => return Ok(SolverSpec::Exact(SearchConfig::mc())),
            "fc" => return Ok(SolverSpec::Exact(SearchConfig::fc())),
            "fc+o" => return Ok(SolverSpec::Exact(SearchConfig::fc_ordered())),
            "fc+o+s" => return Ok(SolverSpec::Exact(SearchConfig::fc_ordered_staged())),
            _ => {}
        }
        if let Some(k) = token.strip_prefix("bs").and_then(|k| k.parse::<usize>().ok()) {
            if k >= 1 {
                return Ok(SolverSpec::BeamSearch { k, seed: 0 });
            }
        }
        if let Some(k) = token.strip_prefix("kbt").and_then(|k| k.parse::<usize>().ok()) {
            if k >= 1 {
                return Ok(SolverSpec::KBestTrees { k });
            }
        }
        Err(SolverParseError(token.to_string()))
    }

    fn is_anytime(&self) -> bool {
        matches!(self, SolverSpec::Exact(_))
    }

    fn run(&self, spn: &Spn, budget: Option<Duration>) -> SolveResult {
        match self {
            SolverSpec::BestTree => best_tree(spn),
            SolverSpec::NormalizedGreedy => normalized_greedy(spn),
            SolverSpec::BeamSearch { k, seed } => beam_search(spn, *k, *seed, BeamInit::Random),
            SolverSpec::ArgmaxProduct => argmax_product(spn),
            SolverSpec::KBestTrees { k } => k_best_trees(spn, *k),
            SolverSpec::Exact(config) => {
                let config = SearchConfig { time_budget: budget, ..config.clone() };
                max_exact(spn, &config)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchCell {
    pub solver: String,
    pub problem: usize,
    /// NEG_INFINITY when the solver produced no usable result in budget.
    pub score: f64,
    pub time_ms: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone)]
pub struct SolverAggregate {
    pub solver: String,
    /// Problems where the solver's score ties the best score of any solver
    /// (exact float equality).
    pub wins: usize,
    pub finished: usize,
    pub mean_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub cells: Vec<BenchCell>,
    pub aggregates: Vec<SolverAggregate>,
    pub num_problems: usize,
}

impl BenchReport {
    pub fn cell(&self, solver: &str, problem: usize) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.solver == solver && c.problem == problem)
    }
}

/// Run every solver on every problem. The MAP-to-MAX reduction runs once per
/// problem, outside the timed region; timings cover the solver alone.
///
/// Anytime solvers receive `budget` directly. One-shot solvers are skipped
/// under a zero budget and disqualified after the fact if they overrun it.
pub fn run_benchmark(
    spn: &Spn,
    problems: &[MapProblem],
    solvers: &[SolverSpec],
    budget: Option<Duration>,
) -> BenchReport {
    let reduced: Vec<Spn> = problems.iter().map(|p| map_to_max(spn, p)).collect();
    let mut cells = Vec::with_capacity(solvers.len() * problems.len());
    for spec in solvers {
        let label = spec.label();
        for (idx, instance) in reduced.iter().enumerate() {
            let cell = if !spec.is_anytime() && budget == Some(Duration::ZERO) {
                BenchCell {
                    solver: label.clone(),
                    problem: idx,
                    score: f64::NEG_INFINITY,
                    time_ms: 0.0,
                    status: SolveStatus::TimeoutNoResult,
                }
            } else {
                let start = Instant::now();
                let result = spec.run(instance, budget);
                let elapsed = start.elapsed();
                let overran = !spec.is_anytime() && budget.is_some_and(|b| elapsed > b);
                BenchCell {
                    solver: label.clone(),
                    problem: idx,
                    score: if overran { f64::NEG_INFINITY } else { result.score },
                    time_ms: elapsed.as_secs_f64() * 1e3,
                    status: if overran { SolveStatus::TimeoutNoResult } else { result.status },
                }
            };
            cells.push(cell);
        }
    }

    let mut best_per_problem = vec![f64::NEG_INFINITY; problems.len()];
    for cell in &cells {
        if cell.score > best_per_problem[cell.problem] {
            best_per_problem[cell.problem] = cell.score;
        }
    }
    let aggregates = solvers
        .iter()
        .map(|spec| {
            let label = spec.label();
            let mine: Vec<&BenchCell> = cells.iter().filter(|c| c.solver == label).collect();
            SolverAggregate {
                wins: mine
                    .iter()
                    .filter(|c| c.score.is_finite() && c.score == best_per_problem[c.problem])
                    .count(),
                finished: mine.iter().filter(|c| c.status == SolveStatus::Finished).count(),
                mean_time_ms: if mine.is_empty() {
                    0.0
                } else {
                    mine.iter().map(|c| c.time_ms).sum::<f64>() / mine.len() as f64
                },
                solver: label,
            }
        })
        .collect();

    BenchReport { cells, aggregates, num_problems: problems.len() }
}

/// CSV: one row per (solver, problem) cell, a blank line, then the aggregate
/// section. Scores carry 17 significant digits so they reload exactly.
pub fn write_report<W: Write>(report: &BenchReport, mut out: W) -> io::Result<()> {
    writeln!(out, "solver,problem,score,time_ms,status")?;
    for cell in &report.cells {
        writeln!(
            out,
            "{},{},{:.16e},{:.3},{}",
            cell.solver,
            cell.problem,
            cell.score,
            cell.time_ms,
            cell.status.as_str()
        )?;
    }
    writeln!(out)?;
    writeln!(out, "solver,wins,finished,mean_time_ms")?;
    for agg in &report.aggregates {
        writeln!(out, "{},{},{},{:.3}", agg.solver, agg.wins, agg.finished, agg.mean_time_ms)?;
    }
    Ok(())
}
