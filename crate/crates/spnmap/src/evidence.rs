//! Partial evidence: a per-variable set of allowed values.
//!
//! The product of the per-variable sets is the space under search. An empty
//! set for any variable marks a pruned/void space.

use crate::spn::VariableTable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialEvidence {
    /// allowed[var][value]
    allowed: Vec<Vec<bool>>,
    counts: Vec<usize>,
}

impl PartialEvidence {
    /// val(X): every value of every variable allowed.
    pub fn full(vars: &VariableTable) -> Self {
        let allowed: Vec<Vec<bool>> = vars.cards().iter().map(|&k| vec![true; k]).collect();
        let counts = vars.cards().to_vec();
        PartialEvidence { allowed, counts }
    }

    /// A complete assignment as all-singleton sets.
    pub fn complete(vars: &VariableTable, assignment: &[usize]) -> Self {
        assert_eq!(assignment.len(), vars.num_vars());
        let allowed: Vec<Vec<bool>> = vars
            .cards()
            .iter()
            .zip(assignment)
            .map(|(&k, &v)| {
                let mut set = vec![false; k];
                set[v] = true;
                set
            })
            .collect();
        let counts = vec![1; vars.num_vars()];
        PartialEvidence { allowed, counts }
    }

    /// The canonical empty (pruned) space: all sets cleared.
    pub fn void(vars: &VariableTable) -> Self {
        let allowed: Vec<Vec<bool>> = vars.cards().iter().map(|&k| vec![false; k]).collect();
        let counts = vec![0; vars.num_vars()];
        PartialEvidence { allowed, counts }
    }

    pub fn num_vars(&self) -> usize {
        self.allowed.len()
    }

    pub fn card(&self, var: usize) -> usize {
        self.allowed[var].len()
    }

    pub fn allows(&self, var: usize, value: usize) -> bool {
        self.allowed[var][value]
    }

    /// |X[var]|
    pub fn count(&self, var: usize) -> usize {
        self.counts[var]
    }

    /// True iff some variable has no allowed value left.
    pub fn is_void(&self) -> bool {
        self.counts.contains(&0)
    }

    pub fn is_singleton(&self, var: usize) -> bool {
        self.counts[var] == 1
    }

    pub fn singleton_value(&self, var: usize) -> Option<usize> {
        if self.counts[var] != 1 {
            return None;
        }
        self.allowed[var].iter().position(|&b| b)
    }

    pub fn values(&self, var: usize) -> impl Iterator<Item = usize> + '_ {
        self.allowed[var]
            .iter()
            .enumerate()
            .filter_map(|(v, &b)| b.then_some(v))
    }

    /// Restrict `var` to the single value `value`.
    pub fn fix(&self, var: usize, value: usize) -> Self {
        let mut next = self.clone();
        for b in next.allowed[var].iter_mut() {
            *b = false;
        }
        next.allowed[var][value] = true;
        next.counts[var] = 1;
        next
    }

    /// Remove one value in place. Returns whether it was present.
    pub fn remove(&mut self, var: usize, value: usize) -> bool {
        if self.allowed[var][value] {
            self.allowed[var][value] = false;
            self.counts[var] -= 1;
            true
        } else {
            false
        }
    }

    pub fn insert(&mut self, var: usize, value: usize) -> bool {
        if !self.allowed[var][value] {
            self.allowed[var][value] = true;
            self.counts[var] += 1;
            true
        } else {
            false
        }
    }

    /// If every variable is a singleton, the unique remaining assignment.
    pub fn determined_assignment(&self) -> Option<Vec<usize>> {
        self.allowed
            .iter()
            .map(|set| {
                let mut it = set.iter().enumerate().filter_map(|(v, &b)| b.then_some(v));
                match (it.next(), it.next()) {
                    (Some(v), None) => Some(v),
                    _ => None,
                }
            })
            .collect()
    }

    /// Number of complete assignments in the space, saturating.
    pub fn size(&self) -> u128 {
        self.counts
            .iter()
            .fold(1u128, |acc, &c| acc.saturating_mul(c as u128))
    }
}
