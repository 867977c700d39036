//! Parse trees: sub-SPNs choosing one child per visited sum and all children
//! per visited product. Enumeration is exponential and intended for
//! test-scale SPNs only.

use std::collections::HashMap;

use crate::error::TreeCountOverflow;
use crate::spn::{Node, NodeId, Spn};

pub const DEFAULT_TREE_CAP: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseTree {
    /// Chosen child index per visited sum node, sorted by sum id.
    pub choices: Vec<(NodeId, usize)>,
    /// Product of the chosen arc weights.
    pub value: f64,
    /// Leaf-induced assignment; None for variables outside the root scope.
    pub assignment: Vec<Option<usize>>,
}

/// Number of distinct parse trees, saturating.
pub fn count_parse_trees(spn: &Spn) -> u128 {
    let mut counts = vec![0u128; spn.num_nodes()];
    for (id, node) in spn.nodes().iter().enumerate() {
        counts[id] = match node {
            Node::Indicator { .. } => 1,
            Node::Sum { children, .. } => children
                .iter()
                .fold(0u128, |acc, &c| acc.saturating_add(counts[c])),
            Node::Product { children } => children
                .iter()
                .fold(1u128, |acc, &c| acc.saturating_mul(counts[c])),
        };
    }
    counts[spn.root()]
}

/// Emit every distinct parse tree exactly once, in child-index lexicographic
/// order, rooted at the SPN root.
pub fn enumerate_parse_trees(spn: &Spn, cap: u128) -> Result<Vec<ParseTree>, TreeCountOverflow> {
    let count = count_parse_trees(spn);
    if count > cap {
        return Err(TreeCountOverflow { count, cap });
    }

    // Per-node tree fragments: (weight product below the node, sum choices,
    // leaf assignments), memoized on node id. Decomposability guarantees the
    // fragments under a product touch disjoint nodes and variables.
    type Fragment = (f64, Vec<(NodeId, usize)>, Vec<(usize, usize)>);
    let mut memo: HashMap<NodeId, Vec<Fragment>> = HashMap::new();

    fn fragments(spn: &Spn, id: NodeId, memo: &mut HashMap<NodeId, Vec<Fragment>>) -> Vec<Fragment> {
        if let Some(cached) = memo.get(&id) {
            return cached.clone();
        }
        let result: Vec<Fragment> = match spn.node(id) {
            Node::Indicator { var, value } => vec![(1.0, vec![], vec![(*var, *value)])],
            Node::Sum { children, weights } => {
                let mut out = Vec::new();
                for (idx, (&c, &w)) in children.iter().zip(weights).enumerate() {
                    for (v, choices, assign) in fragments(spn, c, memo) {
                        let mut choices = choices;
                        choices.push((id, idx));
                        out.push((w * v, choices, assign));
                    }
                }
                out
            }
            Node::Product { children } => {
                let mut out: Vec<Fragment> = vec![(1.0, vec![], vec![])];
                for &c in children {
                    let child_frags = fragments(spn, c, memo);
                    let mut next = Vec::with_capacity(out.len() * child_frags.len());
                    for (v, choices, assign) in &out {
                        for (cv, cchoices, cassign) in &child_frags {
                            let mut choices = choices.clone();
                            choices.extend_from_slice(cchoices);
                            let mut assign = assign.clone();
                            assign.extend_from_slice(cassign);
                            next.push((v * cv, choices, assign));
                        }
                    }
                    out = next;
                }
                out
            }
        };
        memo.insert(id, result.clone());
        result
    }

    let frags = fragments(spn, spn.root(), &mut memo);
    let trees = frags
        .into_iter()
        .map(|(value, mut choices, assign)| {
            choices.sort_unstable();
            let mut assignment = vec![None; spn.num_vars()];
            for (var, val) in assign {
                debug_assert!(assignment[var].is_none(), "parse tree revisits a variable");
                assignment[var] = Some(val);
            }
            ParseTree { choices, value, assignment }
        })
        .collect();
    Ok(trees)
}
