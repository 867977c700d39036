//! Anytime exact MAX solver: depth-first branch-and-bound over per-variable
//! value sets, with marginal/forward checking, a dynamic ordering heuristic,
//! and in-search reduction of the SPN onto the undetermined variables.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::best_tree;
use crate::eval::{derivatives, evaluate, evaluate_assignment, DerivativeTable};
use crate::evidence::PartialEvidence;
use crate::reduce::{map_to_max, MapProblem};
use crate::result::{PruneTrace, SolveResult, SolveStats, SolveStatus};
use crate::spn::Spn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pruning {
    /// Keep a space only while its total mass strictly exceeds the incumbent.
    Marginal,
    /// Remove individual values whose subspace mass cannot beat the incumbent.
    #[default]
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initializer {
    /// All variables at value 0.
    FirstAssignment,
    /// Uniform random assignment from the given seed.
    Random(u64),
    /// Best-tree approximation (the default: a strong incumbent for free).
    BestTree,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub pruning: Pruning,
    /// Dynamic variable/value ordering (fewest values first, best mass first).
    pub ordering: bool,
    /// Reduce the SPN onto the undetermined variables during the search.
    pub staging: bool,
    /// Determined in-scope variables required before a reduction fires.
    pub stage_interval: usize,
    pub time_budget: Option<Duration>,
    pub initializer: Initializer,
    /// Record every pruning call for offline analysis.
    pub trace_prunes: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            pruning: Pruning::Forward,
            ordering: true,
            staging: true,
            stage_interval: 4,
            time_budget: None,
            initializer: Initializer::BestTree,
            trace_prunes: false,
        }
    }
}

impl SearchConfig {
    /// Marginal checking only, no ordering, no staging.
    pub fn mc() -> Self {
        SearchConfig {
            pruning: Pruning::Marginal,
            ordering: false,
            staging: false,
            ..Default::default()
        }
    }

    /// Forward checking only.
    pub fn fc() -> Self {
        SearchConfig { ordering: false, staging: false, ..Default::default() }
    }

    /// Forward checking plus ordering.
    pub fn fc_ordered() -> Self {
        SearchConfig { staging: false, ..Default::default() }
    }

    /// Everything on (same as default()).
    pub fn fc_ordered_staged() -> Self {
        SearchConfig::default()
    }
}

/// Marginal checking: the returned space is the input when S(space) strictly
/// exceeds `best`, otherwise the void space.
pub fn marginal_checking(spn: &Spn, space: &PartialEvidence, best: f64) -> PartialEvidence {
    let mass = evaluate(spn, space).expect("matching variable table");
    if mass > best {
        space.clone()
    } else {
        PartialEvidence::void(spn.vars())
    }
}

/// Forward checking to fixpoint: drop value x of X whenever
/// best >= S(space with X restricted to x). Only variables in the SPN's root
/// scope are examined. Also returns the last derivative table computed, which
/// reflects the returned space whenever that space is non-void.
pub fn forward_checking(
    spn: &Spn,
    space: &PartialEvidence,
    best: f64,
) -> (PartialEvidence, Option<DerivativeTable>) {
    forward_checking_counted(spn, space, best, &mut 0)
}

fn forward_checking_counted(
    spn: &Spn,
    space: &PartialEvidence,
    best: f64,
    removed: &mut u64,
) -> (PartialEvidence, Option<DerivativeTable>) {
    let mut space = space.clone();
    let mut last = None;
    loop {
        if space.is_void() {
            return (space, last);
        }
        // The derivative of an indicator at `space` is the mass of `space`
        // with that variable pinned to the indicator's value.
        let table = derivatives(spn, &space).expect("matching variable table");
        let mut changed = false;
        for &v in spn.root_scope() {
            let var = v as usize;
            for value in 0..space.card(var) {
                if space.allows(var, value) && best >= table.get(var, value) {
                    space.remove(var, value);
                    *removed += 1;
                    changed = true;
                }
            }
        }
        let void = space.is_void();
        last = Some(table);
        if !changed || void {
            return (space, last);
        }
    }
}

struct Search<'a> {
    original: &'a Spn,
    config: &'a SearchConfig,
    deadline: Option<Instant>,
    best_score: f64,
    best_assignment: Vec<usize>,
    stats: SolveStats,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                self.timed_out = true;
                return true;
            }
        }
        false
    }

    fn offer(&mut self, assignment: Vec<usize>) {
        let score = evaluate_assignment(self.original, &assignment)
            .expect("complete assignment over the original variables");
        if score > self.best_score
            || (score == self.best_score && assignment < self.best_assignment)
        {
            self.best_score = score;
            self.best_assignment = assignment;
        }
    }

    /// Prune `space`; returns the surviving space and, when forward checking
    /// ran, its last derivative table for ordering reuse.
    fn prune(&mut self, spn: &Spn, space: &PartialEvidence) -> (PartialEvidence, Option<DerivativeTable>) {
        let (pruned, table) = match self.config.pruning {
            Pruning::Marginal => (marginal_checking(spn, space, self.best_score), None),
            Pruning::Forward => {
                forward_checking_counted(spn, space, self.best_score, &mut self.stats.fc_values_removed)
            }
        };
        let emptied = pruned.is_void();
        if emptied {
            match self.config.pruning {
                Pruning::Marginal => self.stats.mc_prunes += 1,
                Pruning::Forward => self.stats.fc_prunes += 1,
            }
        }
        if self.config.trace_prunes {
            self.stats.prune_trace.push(PruneTrace {
                space: space.clone(),
                best_score: self.best_score,
                emptied,
            });
        }
        (pruned, table)
    }

    fn search(&mut self, spn: &Spn, space: PartialEvidence) {
        if self.out_of_time() {
            return;
        }
        self.stats.nodes_expanded += 1;

        // Base case before pruning: a fully determined space is offered as a
        // candidate even when it merely ties the incumbent.
        if let Some(assignment) = space.determined_assignment() {
            self.offer(assignment);
            return;
        }

        let (space, mut table) = self.prune(spn, &space);
        if space.is_void() {
            return;
        }
        if let Some(assignment) = space.determined_assignment() {
            // Forward checking narrowed everything down to one assignment.
            self.offer(assignment);
            return;
        }

        // Stage: project the SPN onto the undetermined variables once enough
        // in-scope variables have been pinned down.
        let mut spn = spn;
        let staged;
        if self.config.staging {
            let determined = spn
                .root_scope()
                .iter()
                .filter(|&&v| space.is_singleton(v as usize))
                .count();
            if determined >= self.config.stage_interval {
                let query: Vec<usize> = spn
                    .root_scope()
                    .iter()
                    .map(|&v| v as usize)
                    .filter(|&v| !space.is_singleton(v))
                    .collect();
                let evidence: Vec<(usize, usize)> = (0..space.num_vars())
                    .filter_map(|v| space.singleton_value(v).map(|x| (v, x)))
                    .collect();
                let problem = MapProblem::new(spn.vars(), query, evidence, vec![])
                    .expect("singleton/non-singleton variables partition the table");
                staged = map_to_max(spn, &problem);
                self.stats.stage_reductions += 1;
                spn = &staged;
                // Derivatives of the old circuit no longer apply.
                table = None;
            }
        }

        let var = choose_variable(spn, &space, self.config.ordering);
        let values = order_values(spn, &space, var, self.config.ordering, table.as_ref());
        for value in values {
            if self.out_of_time() {
                return;
            }
            self.search(spn, space.fix(var, value));
        }
    }
}

/// Branching variable: with ordering, the undetermined in-scope variable with
/// the fewest remaining values (ties to the lower index); without, the first
/// undetermined in-scope variable.
fn choose_variable(spn: &Spn, space: &PartialEvidence, ordering: bool) -> usize {
    let undetermined = spn
        .root_scope()
        .iter()
        .map(|&v| v as usize)
        .filter(|&v| space.count(v) > 1);
    if ordering {
        undetermined
            .min_by_key(|&v| space.count(v))
            .expect("a non-determined space has an undetermined scope variable")
    } else {
        undetermined
            .min()
            .expect("a non-determined space has an undetermined scope variable")
    }
}

/// Value order for `var`: with ordering, descending subspace mass (ties to
/// the lower value), reusing the forward-checking table when it is current;
/// without, ascending value order.
fn order_values(
    spn: &Spn,
    space: &PartialEvidence,
    var: usize,
    ordering: bool,
    table: Option<&DerivativeTable>,
) -> Vec<usize> {
    let mut values: Vec<usize> = space.values(var).collect();
    if !ordering {
        return values;
    }
    let fresh;
    let table = match table {
        Some(t) => t,
        None => {
            fresh = derivatives(spn, space).expect("matching variable table");
            &fresh
        }
    };
    values.sort_by(|&a, &b| table.get(var, b).total_cmp(&table.get(var, a)).then(a.cmp(&b)));
    values
}

/// Anytime exact MAX. The incumbent starts at the configured initializer and
/// is returned unchanged if the time budget is already exhausted; otherwise
/// the search either proves optimality (Finished) or runs out of time with
/// the best incumbent found so far (TimeoutWithResult).
pub fn max_exact(spn: &Spn, config: &SearchConfig) -> SolveResult {
    let start = Instant::now();
    let deadline = config.time_budget.map(|b| start + b);

    let scope = spn.scope_mask();
    let initial = match config.initializer {
        Initializer::FirstAssignment => vec![0usize; spn.num_vars()],
        Initializer::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..spn.num_vars())
                .map(|v| if scope[v] { rng.gen_range(0..spn.vars().card(v)) } else { 0 })
                .collect()
        }
        Initializer::BestTree => best_tree(spn).assignment,
    };
    let initial_score = evaluate_assignment(spn, &initial).expect("assignment covers all variables");

    let stats = SolveStats {
        unconstrained_vars: (0..spn.num_vars()).filter(|&v| !scope[v]).collect(),
        ..Default::default()
    };

    let mut search = Search {
        original: spn,
        config,
        deadline,
        best_score: initial_score,
        best_assignment: initial,
        stats,
        timed_out: false,
    };

    // Out-of-scope variables are pinned to 0 up front; they cannot change the
    // score and keeping them singleton keeps every space a product over the
    // scope alone.
    let mut space = PartialEvidence::full(spn.vars());
    for (v, in_scope) in scope.iter().enumerate() {
        if !in_scope {
            space = space.fix(v, 0);
        }
    }
    search.search(spn, space);

    let status = if search.timed_out {
        SolveStatus::TimeoutWithResult
    } else {
        SolveStatus::Finished
    };
    SolveResult {
        score: search.best_score,
        zero_mass: search.best_score == 0.0,
        assignment: search.best_assignment,
        status,
        elapsed: start.elapsed(),
        stats: search.stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exhaustive::brute_force_max;
    use crate::generate::{random_spn, SpnGenConfig};
    use crate::text::parse_spn;
    use crate::SPN_A;

    fn spn_a() -> Spn {
        parse_spn(SPN_A).unwrap()
    }

    #[test]
    fn marginal_checking_thresholds() {
        let spn = spn_a();
        let full = PartialEvidence::full(spn.vars());
        // Marginal is 1.0: strictly above 0.3, not strictly above 1.0.
        assert_eq!(marginal_checking(&spn, &full, 0.3), full);
        assert!(marginal_checking(&spn, &full, 1.0).is_void());

        let sub = full.fix(0, 1); // S = 0.54
        assert_eq!(marginal_checking(&spn, &sub, 0.5), sub);
        assert!(marginal_checking(&spn, &sub, 0.54).is_void());

        // {X0=0} x {0,1} has mass 0.46 > 0.378: kept. {X0=1} x {X1=1} has
        // mass 0.162 <= 0.378: emptied.
        let x0_zero = full.fix(0, 0);
        assert_eq!(marginal_checking(&spn, &x0_zero, 0.378), x0_zero);
        assert!(marginal_checking(&spn, &full.fix(0, 1).fix(1, 1), 0.378).is_void());

        // best = -inf keeps everything.
        assert_eq!(marginal_checking(&spn, &full, f64::NEG_INFINITY), full);
    }

    #[test]
    fn forward_checking_keeps_below_threshold() {
        let spn = spn_a();
        let full = PartialEvidence::full(spn.vars());
        // Subspace masses: X0 -> 0.54/0.46, X1 -> 0.62/0.38; nothing at or
        // below 0.3, so the space is untouched.
        let (space, table) = forward_checking(&spn, &full, 0.3);
        assert_eq!(space, full);
        let table = table.unwrap();
        assert!((table.get(0, 1) - 0.54).abs() < 1e-12);
        assert!((table.get(1, 0) - 0.62).abs() < 1e-12);

        // All subspace masses (0.54, 0.46, 0.62, 0.38) exceed 0.378.
        let (space, _) = forward_checking(&spn, &full, 0.378);
        assert_eq!(space, full);
        // On {X0=0} x {0,1} the masses are 0.218 and 0.242; both fall.
        let (space, _) = forward_checking(&spn, &full.fix(0, 0), 0.378);
        assert!(space.is_void());
        // best = -inf keeps everything.
        let (space, _) = forward_checking(&spn, &full, f64::NEG_INFINITY);
        assert_eq!(space, full);
    }

    #[test]
    fn forward_checking_cascades_to_void() {
        let spn = spn_a();
        let full = PartialEvidence::full(spn.vars());
        // best = 0.5 removes X0=0 (0.46), then the restricted space has
        // masses 0.378/0.162 for X1 and empties — while marginal checking
        // keeps the same space (total mass 1.0 > 0.5).
        let (space, _) = forward_checking(&spn, &full, 0.5);
        assert!(space.is_void());
        assert!(!marginal_checking(&spn, &full, 0.5).is_void());
    }

    #[test]
    fn forward_checking_partial_removal() {
        let spn = spn_a();
        let full = PartialEvidence::full(spn.vars());
        let (space, _) = forward_checking(&spn, &full, 0.4);
        // 0.46 > 0.4 keeps X0 intact at first glance? No: X1=1 has 0.38 <=
        // 0.4 and is removed; then X0 masses become 0.378/0.242 and both go,
        // emptying the space.
        assert!(space.is_void());

        let (space, _) = forward_checking(&spn, &full, 0.35);
        // Only X1=1 (0.38) survives 0.35; X1=1 stays. Check: nothing <= 0.35
        // initially, space unchanged.
        assert_eq!(space, full);
    }

    #[test]
    fn ordering_prefers_heavier_values() {
        let spn = spn_a();
        let full = PartialEvidence::full(spn.vars());
        assert_eq!(order_values(&spn, &full, 0, true, None), vec![1, 0]);
        assert_eq!(order_values(&spn, &full, 1, true, None), vec![0, 1]);
        assert_eq!(order_values(&spn, &full, 0, false, None), vec![0, 1]);
    }

    #[test]
    fn all_configs_solve_spn_a() {
        let spn = spn_a();
        for config in [
            SearchConfig::mc(),
            SearchConfig::fc(),
            SearchConfig::fc_ordered(),
            SearchConfig::fc_ordered_staged(),
        ] {
            let result = max_exact(&spn, &config);
            assert_eq!(result.assignment, vec![1, 0]);
            assert!((result.score - 0.378).abs() < 1e-12);
            assert_eq!(result.status, SolveStatus::Finished);
        }
    }

    #[test]
    fn configs_match_brute_force_on_random_spns() {
        for seed in 0..15 {
            let spn = random_spn(&SpnGenConfig::new(6), seed);
            let oracle = brute_force_max(&spn).unwrap();
            for config in [SearchConfig::mc(), SearchConfig::fc(), SearchConfig::default()] {
                let result = max_exact(&spn, &config);
                let denom = oracle.score.max(1.0);
                assert!(
                    (result.score - oracle.score).abs() / denom < 1e-12,
                    "seed {seed}: {} vs oracle {}",
                    result.score,
                    oracle.score
                );
            }
        }
    }

    #[test]
    fn staging_changes_nothing_but_runs() {
        for seed in 20..30 {
            let spn = random_spn(&SpnGenConfig::new(8), seed);
            let plain = max_exact(&spn, &SearchConfig::fc_ordered());
            let staged_config = SearchConfig { stage_interval: 2, ..SearchConfig::default() };
            let staged = max_exact(&spn, &staged_config);
            assert_eq!(plain.score, staged.score);
            assert!(staged.stats.stage_reductions > 0, "seed {seed} never staged");
        }
    }

    #[test]
    fn zero_budget_returns_the_initializer() {
        let spn = spn_a();
        let config = SearchConfig {
            time_budget: Some(Duration::ZERO),
            initializer: Initializer::FirstAssignment,
            ..Default::default()
        };
        let result = max_exact(&spn, &config);
        assert_eq!(result.assignment, vec![0, 0]);
        assert!((result.score - 0.242).abs() < 1e-12);
        assert_eq!(result.status, SolveStatus::TimeoutWithResult);

        let config = SearchConfig {
            time_budget: Some(Duration::ZERO),
            initializer: Initializer::BestTree,
            ..Default::default()
        };
        let result = max_exact(&spn, &config);
        assert_eq!(result.assignment, vec![1, 0]);
        assert!((result.score - 0.378).abs() < 1e-12);
    }

    #[test]
    fn prune_traces_are_recorded() {
        // Determined spaces skip pruning, so emptied traces only show up once
        // the search is deep enough for a partial space to fall below the
        // incumbent; a handful of 6-variable instances guarantees that.
        let mut saw_emptied = false;
        for seed in 0..5 {
            let spn = random_spn(&SpnGenConfig::new(6), seed);
            let config = SearchConfig { trace_prunes: true, ..SearchConfig::mc() };
            let result = max_exact(&spn, &config);
            assert!(!result.stats.prune_trace.is_empty());
            saw_emptied |= result.stats.prune_trace.iter().any(|t| t.emptied);
        }
        assert!(saw_emptied);
    }

    #[test]
    fn zero_mass_evidence_is_flagged() {
        // An SPN whose only indicator for X0 is value 1, evaluated where the
        // optimum is still found but with mass 0 impossible here; instead use
        // a sum with zero weights to force an all-zero circuit.
        let doc = "SPN 1\nL 0 0\nL 0 1\nS 0 0 1 0";
        let spn = parse_spn(doc).unwrap();
        let result = max_exact(&spn, &SearchConfig::default());
        assert!(result.zero_mass);
        assert_eq!(result.score, 0.0);
    }
}
