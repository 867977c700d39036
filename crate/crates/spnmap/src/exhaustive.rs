//! Exponential-time oracles: exhaustive MAX by enumerating every complete
//! assignment. Used for small-instance verification and as the test oracle.

use std::time::Instant;

use crate::error::SpaceTooLarge;
use crate::eval::evaluate_assignment;
use crate::result::{SolveResult, SolveStats, SolveStatus};
use crate::spn::Spn;

pub const DEFAULT_ENUM_CAP: u128 = 1 << 20;

/// Visit all complete assignments in lexicographic order.
pub fn for_each_assignment<F: FnMut(&[usize])>(cards: &[usize], mut f: F) {
    let mut current = vec![0usize; cards.len()];
    loop {
        f(&current);
        // Odometer increment from the last variable.
        let mut i = cards.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            current[i] += 1;
            if current[i] < cards[i] {
                break;
            }
            current[i] = 0;
        }
    }
}

/// Exact argmax by enumeration; ties resolved to the lexicographically
/// smallest assignment by the iteration order.
pub fn brute_force_max(spn: &Spn) -> Result<SolveResult, SpaceTooLarge> {
    brute_force_max_capped(spn, DEFAULT_ENUM_CAP)
}

pub fn brute_force_max_capped(spn: &Spn, cap: u128) -> Result<SolveResult, SpaceTooLarge> {
    let count = spn.vars().total_assignments();
    if count > cap {
        return Err(SpaceTooLarge { count, cap });
    }
    let start = Instant::now();
    let mut best_score = f64::NEG_INFINITY;
    let mut best: Vec<usize> = Vec::new();
    for_each_assignment(spn.vars().cards(), |x| {
        let score = evaluate_assignment(spn, x).expect("matching variable table");
        if score > best_score {
            best_score = score;
            best = x.to_vec();
        }
    });
    Ok(SolveResult {
        assignment: best,
        score: best_score,
        status: SolveStatus::Finished,
        elapsed: start.elapsed(),
        zero_mass: best_score == 0.0,
        stats: SolveStats::default(),
    })
}
