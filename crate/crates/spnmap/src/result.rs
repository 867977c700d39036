//! Solver output shared by the exact and approximate solvers.

use std::time::Duration;

use crate::evidence::PartialEvidence;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Finished,
    TimeoutWithResult,
    TimeoutNoResult,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Finished => "finished",
            SolveStatus::TimeoutWithResult => "timeout_with_result",
            SolveStatus::TimeoutNoResult => "timeout_no_result",
        }
    }
}

/// A pruning call recorded for offline analysis (only with tracing on).
#[derive(Debug, Clone)]
pub struct PruneTrace {
    pub space: PartialEvidence,
    pub best_score: f64,
    pub emptied: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub nodes_expanded: u64,
    /// Spaces emptied by marginal checking.
    pub mc_prunes: u64,
    /// Spaces emptied by forward checking.
    pub fc_prunes: u64,
    /// Individual values removed by forward checking.
    pub fc_values_removed: u64,
    pub stage_reductions: u64,
    pub beam_rounds: u64,
    /// Sum nodes where every outgoing weight was zero (greedy fallback).
    pub zero_weight_sums: u64,
    /// Variables outside the SPN scope that were defaulted to value 0.
    pub unconstrained_vars: Vec<usize>,
    /// Recorded pruning calls; empty unless tracing was requested.
    pub prune_trace: Vec<PruneTrace>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// One value per SPN variable.
    pub assignment: Vec<usize>,
    /// Always the SPN score of `assignment` as computed by `evaluate`.
    pub score: f64,
    pub status: SolveStatus,
    pub elapsed: Duration,
    pub zero_mass: bool,
    pub stats: SolveStats,
}
