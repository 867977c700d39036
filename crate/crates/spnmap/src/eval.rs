//! Forward evaluation and derivative (backward) passes.

use crate::error::EvalError;
use crate::evidence::PartialEvidence;
use crate::spn::{Node, Spn, VariableTable};

/// d f / d lambda_{X=x} for every (variable, value) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeTable {
    offsets: Vec<usize>,
    entries: Vec<f64>,
}

impl DerivativeTable {
    fn zeroed(vars: &VariableTable) -> Self {
        let mut offsets = Vec::with_capacity(vars.num_vars() + 1);
        let mut total = 0;
        offsets.push(0);
        for &k in vars.cards() {
            total += k;
            offsets.push(total);
        }
        DerivativeTable { offsets, entries: vec![0.0; total] }
    }

    pub fn get(&self, var: usize, value: usize) -> f64 {
        debug_assert!(value < self.offsets[var + 1] - self.offsets[var]);
        self.entries[self.offsets[var] + value]
    }

    fn add(&mut self, var: usize, value: usize, d: f64) {
        self.entries[self.offsets[var] + value] += d;
    }
}

fn check_vars(spn: &Spn, x: &PartialEvidence) -> Result<(), EvalError> {
    if spn.num_vars() != x.num_vars() {
        return Err(EvalError::VariableCountMismatch {
            evidence: x.num_vars(),
            spn: spn.num_vars(),
        });
    }
    Ok(())
}

/// S(X): one bottom-up pass, linear in the arc count.
pub fn evaluate(spn: &Spn, x: &PartialEvidence) -> Result<f64, EvalError> {
    check_vars(spn, x)?;
    let values = forward_values(spn, x);
    Ok(values[spn.root()])
}

/// S at a complete assignment.
pub fn evaluate_assignment(spn: &Spn, assignment: &[usize]) -> Result<f64, EvalError> {
    evaluate(spn, &PartialEvidence::complete(spn.vars(), assignment))
}

/// Node values of the bottom-up pass, in stored order.
pub fn forward_values(spn: &Spn, x: &PartialEvidence) -> Vec<f64> {
    let mut values = vec![0.0f64; spn.num_nodes()];
    for (id, node) in spn.nodes().iter().enumerate() {
        values[id] = match node {
            Node::Indicator { var, value } => {
                if x.allows(*var, *value) {
                    1.0
                } else {
                    0.0
                }
            }
            Node::Sum { children, weights } => children
                .iter()
                .zip(weights)
                .map(|(&c, &w)| w * values[c])
                .sum(),
            Node::Product { children } => children.iter().map(|&c| values[c]).product(),
        };
    }
    values
}

/// One forward pass plus one backward pass.
///
/// Backward rule: root seeds 1; a sum parent adds `w * d(S)` to each child; a
/// product parent adds `d(P) * prod of the other children's values`, computed
/// with prefix/suffix products so zero-valued children stay exact.
pub fn derivatives(spn: &Spn, x: &PartialEvidence) -> Result<DerivativeTable, EvalError> {
    check_vars(spn, x)?;
    let values = forward_values(spn, x);
    let mut node_deriv = vec![0.0f64; spn.num_nodes()];
    node_deriv[spn.root()] = 1.0;
    let mut table = DerivativeTable::zeroed(spn.vars());
    let mut scratch: Vec<f64> = Vec::new();
    for id in (0..spn.num_nodes()).rev() {
        let d = node_deriv[id];
        match spn.node(id) {
            Node::Indicator { var, value } => table.add(*var, *value, d),
            Node::Sum { children, weights } => {
                if d != 0.0 {
                    for (&c, &w) in children.iter().zip(weights) {
                        node_deriv[c] += w * d;
                    }
                }
            }
            Node::Product { children } => {
                if d != 0.0 {
                    // scratch[i] = product of values of children after i.
                    scratch.clear();
                    scratch.resize(children.len(), 1.0);
                    let mut suffix = 1.0;
                    for i in (0..children.len()).rev() {
                        scratch[i] = suffix;
                        suffix *= values[children[i]];
                    }
                    let mut prefix = 1.0;
                    for (i, &c) in children.iter().enumerate() {
                        node_deriv[c] += d * prefix * scratch[i];
                        prefix *= values[c];
                    }
                }
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spn::VariableTable;
    use crate::text::parse_spn;
    use crate::SPN_A;

    fn spn_a() -> Spn {
        parse_spn(SPN_A).unwrap()
    }

    #[test]
    fn evaluate_spn_a_complete() {
        let spn = spn_a();
        // Oracle: enumeration of Eq.-1 terms gives 0.378 for (X0=1, X1=0).
        let v = evaluate_assignment(&spn, &[1, 0]).unwrap();
        assert!((v - 0.378).abs() < 1e-12);
    }

    #[test]
    fn evaluate_spn_a_marginal_is_one() {
        let spn = spn_a();
        // 0.378 + 0.162 + 0.242 + 0.218 = 1.0
        let v = evaluate(&spn, &PartialEvidence::full(spn.vars())).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_single_indicator() {
        let spn = parse_spn("SPN 1\nL 0 0").unwrap();
        let v = evaluate_assignment(&spn, &[0]).unwrap();
        assert_eq!(v, 1.0);
        let v = evaluate_assignment(&spn, &[1]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn variable_count_mismatch() {
        let spn = spn_a();
        let other = VariableTable::binary(3);
        assert!(evaluate(&spn, &PartialEvidence::full(&other)).is_err());
    }

    #[test]
    fn derivatives_spn_a_full_space() {
        let spn = spn_a();
        let t = derivatives(&spn, &PartialEvidence::full(spn.vars())).unwrap();
        // Oracle: S(1,1) + S(1,0) = 0.54 by enumeration.
        assert!((t.get(0, 1) - 0.54).abs() < 1e-12);
        assert!((t.get(0, 0) - 0.46).abs() < 1e-12);
        assert!((t.get(1, 0) - 0.62).abs() < 1e-12);
        assert!((t.get(1, 1) - 0.38).abs() < 1e-12);
    }

    #[test]
    fn derivatives_spn_a_restricted() {
        let spn = spn_a();
        // X = {0,1} x {0}: entry (X0, 1) = evaluate at (1,0) = 0.378.
        let x = PartialEvidence::full(spn.vars()).fix(1, 0);
        let t = derivatives(&spn, &x).unwrap();
        assert!((t.get(0, 1) - 0.378).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_single_indicator() {
        let spn = parse_spn("SPN 1\nL 0 0").unwrap();
        let t = derivatives(&spn, &PartialEvidence::full(spn.vars())).unwrap();
        assert_eq!(t.get(0, 0), 1.0);
        assert_eq!(t.get(0, 1), 0.0);
    }

    #[test]
    fn product_backward_with_zero_children_is_exact() {
        // P over lambda_{X0=0} and lambda_{X1=0}; evidence kills both leaves.
        let doc = "SPN 2\nL 0 0\nL 1 0\nP 0 1";
        let spn = parse_spn(doc).unwrap();
        let x = PartialEvidence::complete(spn.vars(), &[1, 1]);
        let t = derivatives(&spn, &x).unwrap();
        // d/d lambda_{X0=0} = value of the other child = 0, exactly.
        assert_eq!(t.get(0, 0), 0.0);
        let x = PartialEvidence::complete(spn.vars(), &[1, 0]);
        let t = derivatives(&spn, &x).unwrap();
        assert_eq!(t.get(0, 0), 1.0);
        assert_eq!(t.get(1, 0), 0.0);
    }
}
