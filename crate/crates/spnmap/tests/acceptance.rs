//! Acceptance gate: one test per release criterion, each printing a single
//! PASS line on success (a failed assertion fails the test and the gate).
//!
//! Tolerances are pinned here and nowhere else:
//! * REL_EXACT (1e-12): solver scores against the enumeration oracle;
//! * REL_IDENT (1e-9): algebraic identities (reduction, derivatives,
//!   parse-tree decomposition, compiled joint distributions).

use std::time::Duration;

use spnmap::approx::{argmax_product, best_tree, k_best_trees};
use spnmap::bench::{generate_problems, run_benchmark, write_report, SolverSpec};
use spnmap::exact::{forward_checking, max_exact, Initializer, SearchConfig};
use spnmap::generate::{random_spn, random_spn_in_size, random_tree_bn, SpnGenConfig};
use spnmap::{
    bn_to_spn, bn_to_spn_with_stats, brute_force_max, count_parse_trees, derivatives,
    enumerate_parse_trees, evaluate, evaluate_assignment, for_each_assignment, map_to_max,
    parse_bn, MapProblem, PartialEvidence, SolveStatus, Spn, TreeBn,
};

const REL_EXACT: f64 = 1e-12;
const REL_IDENT: f64 = 1e-9;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// The criterion-1/8 instance pool: 200 SPNs with 6..=12 variables and
/// 30..=200 nodes, deterministic across runs.
fn instance_pool() -> Vec<Spn> {
    (0..200u64)
        .map(|i| {
            let n = 6 + (i % 7) as usize;
            random_spn_in_size(&SpnGenConfig::sparse(n), 1000 + i, 30, 200)
        })
        .collect()
}

#[test]
fn criterion_01_exact_solver_matches_enumeration() {
    let configs = [
        ("mc", SearchConfig::mc()),
        ("fc", SearchConfig::fc()),
        ("fc+o", SearchConfig::fc_ordered()),
        ("fc+o+s", SearchConfig::fc_ordered_staged()),
    ];
    for (i, spn) in instance_pool().iter().enumerate() {
        let oracle = brute_force_max(spn).unwrap();
        for (label, config) in &configs {
            let result = max_exact(spn, config);
            assert!(
                close(result.score, oracle.score, REL_EXACT),
                "instance {i} config {label}: {} vs oracle {}",
                result.score,
                oracle.score
            );
            assert_eq!(result.status, SolveStatus::Finished, "instance {i} config {label}");
        }
    }
    println!("PASS criterion 1: all 4 exact-search configurations match enumeration on 200 instances (rel {REL_EXACT:e})");
}

#[test]
fn criterion_02_reduction_identity() {
    let mut pairs = 0;
    for s in 0..20u64 {
        let spn = random_spn(&SpnGenConfig::new(8), 2000 + s);
        let problems = generate_problems(spn.vars(), [1.0, 1.0, 1.0], 5, 3000 + s);
        for problem in &problems {
            pairs += 1;
            let reduced = map_to_max(&spn, problem);
            // Original-side space: evidence pinned, hidden marginalized.
            let mut base = PartialEvidence::full(spn.vars());
            for &(var, value) in problem.evidence() {
                base = base.fix(var, value);
            }
            let q = problem.query();
            let q_cards: Vec<usize> = q.iter().map(|&v| spn.vars().card(v)).collect();
            for_each_assignment(&q_cards, |qx| {
                let mut original_space = base.clone();
                let mut reduced_assignment = vec![0usize; spn.num_vars()];
                for (&var, &value) in q.iter().zip(qx) {
                    original_space = original_space.fix(var, value);
                    reduced_assignment[var] = value;
                }
                let original = evaluate(&spn, &original_space).unwrap();
                let projected = evaluate_assignment(&reduced, &reduced_assignment).unwrap();
                assert!(
                    close(original, projected, REL_IDENT),
                    "S'({qx:?}) = {projected} but S gives {original}"
                );
            });
        }
    }
    assert_eq!(pairs, 100);
    println!("PASS criterion 2: S'(q) = S(q, e, val(H)) on 100 reduction pairs (rel {REL_IDENT:e})");
}

#[test]
fn criterion_03_derivative_identity() {
    let mut pairs = 0;
    for s in 0..25u64 {
        let spn = random_spn(&SpnGenConfig::new(7), 4000 + s);
        for mask in [0u64, 0b01_10, 0b01_01_01, 0xffff] {
            pairs += 1;
            let mut space = PartialEvidence::full(spn.vars());
            for var in 0..spn.num_vars() {
                match (mask.wrapping_add(s) >> (2 * var)) & 3 {
                    0 => space = space.fix(var, 0),
                    1 => space = space.fix(var, 1),
                    _ => {}
                }
            }
            let table = derivatives(&spn, &space).unwrap();
            for var in 0..spn.num_vars() {
                for value in 0..spn.vars().card(var) {
                    let pinned = evaluate(&spn, &space.fix(var, value)).unwrap();
                    assert!(
                        close(table.get(var, value), pinned, REL_IDENT),
                        "d/dx{var}={value}: {} vs {pinned}",
                        table.get(var, value)
                    );
                }
            }
        }
    }
    assert_eq!(pairs, 100);
    println!("PASS criterion 3: indicator derivatives equal pinned-space scores on 100 pairs (rel {REL_IDENT:e})");
}

#[test]
fn criterion_04_parse_tree_decomposition() {
    for s in 0..50u64 {
        let spn = random_spn(&SpnGenConfig::narrow(4 + (s % 3) as usize), 5000 + s);
        let trees = enumerate_parse_trees(&spn, 1 << 20).unwrap();
        assert_eq!(trees.len() as u128, count_parse_trees(&spn));

        let marginal = evaluate(&spn, &PartialEvidence::full(spn.vars())).unwrap();
        let total: f64 = trees.iter().map(|t| t.value).sum();
        assert!(close(total, marginal, REL_IDENT), "tree values sum {total} vs marginal {marginal}");

        // Per assignment: the score is the mass of its consistent trees.
        for_each_assignment(spn.vars().cards(), |x| {
            let score = evaluate_assignment(&spn, x).unwrap();
            let consistent: f64 = trees
                .iter()
                .filter(|t| {
                    t.assignment
                        .iter()
                        .zip(x)
                        .all(|(tv, &xv)| tv.is_none_or(|tv| tv == xv))
                })
                .map(|t| t.value)
                .sum();
            assert!(close(consistent, score, REL_IDENT), "S({x:?}) = {score} vs trees {consistent}");
        });
    }
    println!("PASS criterion 4: network scores decompose over parse trees on 50 instances (rel {REL_IDENT:e})");
}

#[test]
fn criterion_05_kbt_monotone_and_saturating() {
    for s in 0..30u64 {
        let spn = random_spn(&SpnGenConfig::narrow(5), 6000 + s);
        let total = count_parse_trees(&spn);
        assert!(total <= 1 << 16, "instance stays enumerable");

        let bt = best_tree(&spn);
        let mut last = f64::NEG_INFINITY;
        let mut k = 1usize;
        while (k as u128) < 2 * total {
            let result = k_best_trees(&spn, k);
            assert!(result.score >= last, "K={k}: {} < {last}", result.score);
            last = result.score;
            if k == 1 {
                assert_eq!(result.assignment, bt.assignment, "K=1 must reproduce best-tree");
                assert_eq!(result.score, bt.score);
            }
            k *= 2;
        }
        // Saturated K sees every parse tree, hence the true optimum.
        let oracle = brute_force_max(&spn).unwrap();
        let saturated = k_best_trees(&spn, total as usize);
        assert!(
            close(saturated.score, oracle.score, REL_EXACT),
            "saturated K={total}: {} vs {}",
            saturated.score,
            oracle.score
        );
    }
    println!("PASS criterion 5: K-best-tree scores are monotone in K, K=1 equals best-tree, saturation is exact (30 instances)");
}

#[test]
fn criterion_06_tree_solvers_exact_on_compiled_bns() {
    for s in 0..50u64 {
        let bn = random_tree_bn(4 + (s % 5) as usize, 3, 7000 + s);
        let spn = bn_to_spn(&bn);
        let oracle = brute_force_max(&spn).unwrap();
        for (label, result) in [
            ("best-tree", best_tree(&spn)),
            ("argmax-product", argmax_product(&spn)),
            ("1-best-tree", k_best_trees(&spn, 1)),
        ] {
            assert!(
                close(result.score, oracle.score, REL_EXACT),
                "bn {s} solver {label}: {} vs {}",
                result.score,
                oracle.score
            );
        }
    }
    println!("PASS criterion 6: best-tree / argmax-product / 1-best-tree are exact on 50 compiled tree BNs (rel {REL_EXACT:e})");
}

#[test]
fn criterion_07_bn_compilation() {
    // Joint distribution identity and linear size on random BNs.
    for s in 0..30u64 {
        let bn = random_tree_bn(3 + (s % 6) as usize, 4, 8000 + s);
        let spn = bn_to_spn(&bn);
        assert!(spn.validate().is_empty());
        for_each_assignment(bn.cards(), |x| {
            let p = bn.joint(x);
            let v = evaluate_assignment(&spn, x).unwrap();
            assert!(close(v, p, REL_IDENT), "bn {s} at {x:?}: {v} vs {p}");
        });
        let size = spn.num_nodes() + spn.num_arcs();
        assert!(
            size <= 5 * bn.num_parameters(),
            "bn {s}: size {size} exceeds 5x the {} parameters",
            bn.num_parameters()
        );
    }

    // Pinned fixture: a two-variable chain compiles to exactly 9 nodes and
    // 10 arcs, with shared sub-circuits counted once.
    let bn = parse_bn("BN 2\nROOT 0 0.3 0.7\nEDGE 0 1\nCPT 1 | 0 : 0.1 0.9\nCPT 1 | 1 : 0.8 0.2\n").unwrap();
    let (spn, stats) = bn_to_spn_with_stats(&bn);
    assert_eq!((spn.num_nodes(), spn.num_arcs()), (9, 10));
    // Four memoized (variable, value) builds: both values of A and of B.
    assert_eq!(stats.cache_entries, 4);
    assert!(stats.cache_hits > 0, "the B leaves must be shared, not rebuilt");
    println!("PASS criterion 7: compiled SPNs match the BN joint (rel {REL_IDENT:e}), stay linear in CPT size, and hit the pinned 9-node/10-arc fixture");
}

#[test]
fn criterion_08_forward_checking_dominates_marginal_checking() {
    // Replay every space that marginal checking emptied and require forward
    // checking to empty it too, over a slice of the criterion-1 pool.
    let mut replayed = 0;
    for spn in instance_pool().iter().take(40) {
        let config = SearchConfig { trace_prunes: true, ..SearchConfig::mc() };
        let result = max_exact(spn, &config);
        for trace in &result.stats.prune_trace {
            if !trace.emptied {
                continue;
            }
            replayed += 1;
            let (space, _) = forward_checking(spn, &trace.space, trace.best_score);
            assert!(
                space.is_void(),
                "marginal checking emptied a space that forward checking kept (best {})",
                trace.best_score
            );
        }
    }
    assert!(replayed > 100, "only {replayed} emptied spaces were observed");
    println!("PASS criterion 8: forward checking emptied all {replayed} spaces that marginal checking emptied");
}

#[test]
fn criterion_09_anytime_behavior() {
    for s in 0..50u64 {
        let spn = random_spn_in_size(&SpnGenConfig::sparse(12), 9000 + s, 40, 200);
        let init = Initializer::FirstAssignment;
        let init_score = evaluate_assignment(&spn, &vec![0; spn.num_vars()]).unwrap();

        let budgets = [Some(Duration::ZERO), Some(Duration::from_millis(10)), None];
        let mut scores = Vec::new();
        for budget in budgets {
            let config = SearchConfig { time_budget: budget, initializer: init, ..Default::default() };
            let result = max_exact(&spn, &config);
            if budget == Some(Duration::ZERO) {
                assert_eq!(result.score, init_score, "zero budget must return the initializer");
                assert_eq!(result.status, SolveStatus::TimeoutWithResult);
            }
            scores.push(result.score);
        }
        assert!(scores[1] >= scores[0], "10ms {} < 0ms {}", scores[1], scores[0]);
        assert!(scores[2] >= scores[1], "unbounded {} < 10ms {}", scores[2], scores[1]);

        let oracle = brute_force_max(&spn).unwrap();
        assert!(close(scores[2], oracle.score, REL_EXACT));
    }
    println!("PASS criterion 9: incumbent scores are non-decreasing in the budget and a zero budget returns the initializer exactly");
}

#[test]
fn criterion_10_benchmark_dominance() {
    let spn = random_spn(&SpnGenConfig::sparse(30), 424242);
    let solvers = vec![
        SolverSpec::BestTree,
        SolverSpec::NormalizedGreedy,
        SolverSpec::BeamSearch { k: 10, seed: 0 },
        SolverSpec::ArgmaxProduct,
        SolverSpec::KBestTrees { k: 10 },
        SolverSpec::KBestTrees { k: 100 },
        SolverSpec::Exact(SearchConfig::default()),
    ];
    for (suite, proportions) in [("3:3:4", [3.0, 3.0, 4.0]), ("3:1:6", [3.0, 1.0, 6.0])] {
        let problems = generate_problems(spn.vars(), proportions, 100, 0xbe9c);
        let report =
            run_benchmark(&spn, &problems, &solvers, Some(Duration::from_secs(10)));
        for p in 0..100 {
            let exact = report.cell("fc+o+s", p).unwrap();
            let kbt100 = report.cell("kbt100", p).unwrap().score;
            let kbt10 = report.cell("kbt10", p).unwrap().score;
            let bt = report.cell("bt", p).unwrap().score;
            assert_eq!(exact.status, SolveStatus::Finished, "suite {suite} problem {p}");
            assert!(exact.score >= kbt100, "suite {suite} problem {p}: exact < kbt100");
            assert!(kbt100 >= kbt10, "suite {suite} problem {p}: kbt100 < kbt10");
            assert!(kbt10 >= bt, "suite {suite} problem {p}: kbt10 < bt");
        }
        let exact_agg = report.aggregates.iter().find(|a| a.solver == "fc+o+s").unwrap();
        assert_eq!(exact_agg.wins, 100, "suite {suite}: exact must win every problem");

        let mut csv = Vec::new();
        write_report(&report, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("solver,problem,score,time_ms,status\n"));
        assert!(csv.contains("solver,wins,finished,mean_time_ms"));
        // 7 solvers x 100 problems five-field cell rows.
        let cell_rows = csv
            .lines()
            .skip(1)
            .take_while(|l| !l.is_empty())
            .filter(|l| l.split(',').count() == 5)
            .count();
        assert_eq!(cell_rows, 700);
    }
    println!("PASS criterion 10: exact >= kbt100 >= kbt10 >= bt with zero violations on 2x100 problems; CSV report matches the contract");
}

/// Not a numbered criterion, but the suite-wide sanity anchor: the worked
/// two-variable example behaves identically through every public surface.
#[test]
fn anchor_worked_example() {
    let spn = spnmap::parse_spn(spnmap::SPN_A).unwrap();
    assert_eq!((spn.num_nodes(), spn.num_arcs()), (11, 14));
    assert!((evaluate_assignment(&spn, &[1, 0]).unwrap() - 0.378).abs() < 1e-15);
    let problem = MapProblem::new(spn.vars(), vec![0], vec![(1, 1)], vec![]).unwrap();
    let reduced = map_to_max(&spn, &problem);
    assert!((evaluate_assignment(&reduced, &[1, 0]).unwrap() - 0.162).abs() < 1e-15);
    let exact = max_exact(&spn, &SearchConfig::default());
    assert_eq!(exact.assignment, vec![1, 0]);
    let _ = TreeBn::new(
        vec![2, 2],
        vec![None, Some(0)],
        vec![0.3, 0.7],
        vec![vec![], vec![vec![0.1, 0.9], vec![0.8, 0.2]]],
    )
    .unwrap();
    println!("PASS anchor: worked example consistent end to end");
}
