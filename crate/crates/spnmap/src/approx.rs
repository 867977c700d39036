//! Approximate MAX solvers: Best Tree, Normalized Greedy, Beam Search,
//! Argmax-Product, and K-Best Tree.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{derivatives, evaluate_assignment};
use crate::evidence::PartialEvidence;
use crate::result::{SolveResult, SolveStats, SolveStatus};
use crate::spn::{Node, NodeId, Spn};

fn finish(spn: &Spn, assignment: Vec<usize>, start: Instant, stats: SolveStats) -> SolveResult {
    let score = evaluate_assignment(spn, &assignment).expect("assignment covers all variables");
    SolveResult {
        assignment,
        score,
        status: SolveStatus::Finished,
        elapsed: start.elapsed(),
        zero_mass: score == 0.0,
        stats,
    }
}

/// Default assignment plus the record of which variables the SPN never
/// mentions (they are fixed to value 0).
fn base_assignment(spn: &Spn) -> (Vec<usize>, Vec<usize>) {
    let mask = spn.scope_mask();
    let assignment = vec![0usize; spn.num_vars()];
    let unconstrained = (0..spn.num_vars()).filter(|&v| !mask[v]).collect();
    (assignment, unconstrained)
}

/// Max-product pass: every sum becomes a max, then the maximizing parse tree
/// is read off top-down. The reported score is the SPN score of the induced
/// sample, not the tree value.
pub fn best_tree(spn: &Spn) -> SolveResult {
    let start = Instant::now();
    let (tree_value, assignment, unconstrained) = best_tree_inner(spn);
    let mut stats = SolveStats { unconstrained_vars: unconstrained, ..Default::default() };
    let _ = tree_value;
    stats.nodes_expanded = spn.num_nodes() as u64;
    finish(spn, assignment, start, stats)
}

/// (best tree value, induced assignment, unconstrained vars)
pub(crate) fn best_tree_inner(spn: &Spn) -> (f64, Vec<usize>, Vec<usize>) {
    let mut values = vec![0.0f64; spn.num_nodes()];
    for (id, node) in spn.nodes().iter().enumerate() {
        values[id] = match node {
            Node::Indicator { .. } => 1.0,
            Node::Sum { children, weights } => children
                .iter()
                .zip(weights)
                .map(|(&c, &w)| w * values[c])
                .fold(f64::NEG_INFINITY, f64::max),
            Node::Product { children } => children.iter().map(|&c| values[c]).product(),
        };
    }
    let (mut assignment, unconstrained) = base_assignment(spn);
    let mut stack = vec![spn.root()];
    while let Some(id) = stack.pop() {
        match spn.node(id) {
            Node::Indicator { var, value } => assignment[*var] = *value,
            Node::Sum { children, weights } => {
                // First child attaining the max (declaration-order ties).
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (i, (&c, &w)) in children.iter().zip(weights).enumerate() {
                    let v = w * values[c];
                    if v > best_val {
                        best_val = v;
                        best = i;
                    }
                }
                stack.push(children[best]);
            }
            Node::Product { children } => stack.extend(children.iter().copied()),
        }
    }
    (values[spn.root()], assignment, unconstrained)
}

/// Top-down greedy parse-tree construction choosing at each sum the child
/// with the largest locally-normalized weight.
pub fn normalized_greedy(spn: &Spn) -> SolveResult {
    let start = Instant::now();
    let (mut assignment, unconstrained) = base_assignment(spn);
    let mut stats = SolveStats { unconstrained_vars: unconstrained, ..Default::default() };
    let mut stack = vec![spn.root()];
    while let Some(id) = stack.pop() {
        match spn.node(id) {
            Node::Indicator { var, value } => assignment[*var] = *value,
            Node::Sum { children, weights } => {
                // Normalization divides by the same total for every child, so
                // the argmax is the largest raw weight.
                let mut best = 0;
                let mut best_w = f64::NEG_INFINITY;
                for (i, &w) in weights.iter().enumerate() {
                    if w > best_w {
                        best_w = w;
                        best = i;
                    }
                }
                if best_w == 0.0 {
                    stats.zero_weight_sums += 1;
                }
                stack.push(children[best]);
            }
            Node::Product { children } => stack.extend(children.iter().copied()),
        }
    }
    finish(spn, assignment, start, stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamInit {
    /// All members drawn uniformly from the seeded generator.
    #[default]
    Random,
    /// Member 0 seeded with the normalized-greedy result.
    GreedySeeded,
}

/// Beam search over one-variable mutations, scored through the derivative
/// table: entry (X, x) at a complete assignment is exactly the score of the
/// assignment with X flipped to x.
pub fn beam_search(spn: &Spn, k: usize, seed: u64, init: BeamInit) -> SolveResult {
    assert!(k >= 1, "beam size must be at least 1");
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scope = spn.scope_mask();
    let (base, unconstrained) = base_assignment(spn);
    let mut stats = SolveStats { unconstrained_vars: unconstrained, ..Default::default() };

    let mut beam: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut seed_members: Vec<Vec<usize>> = Vec::new();
    if init == BeamInit::GreedySeeded {
        seed_members.push(normalized_greedy(spn).assignment);
    }
    while seed_members.len() < k {
        let mut x = base.clone();
        for (var, in_scope) in scope.iter().enumerate() {
            if *in_scope {
                x[var] = rng.gen_range(0..spn.vars().card(var));
            }
        }
        seed_members.push(x);
    }
    {
        let mut seen = HashSet::new();
        for x in seed_members {
            if seen.insert(x.clone()) {
                let score = evaluate_assignment(spn, &x).unwrap();
                beam.push((x, score));
            }
        }
    }
    sort_beam(&mut beam);

    loop {
        stats.beam_rounds += 1;
        let mut pool = beam.clone();
        for (member, _) in &beam {
            let table = derivatives(spn, &PartialEvidence::complete(spn.vars(), member)).unwrap();
            for (var, in_scope) in scope.iter().enumerate() {
                if !*in_scope {
                    continue;
                }
                for value in 0..spn.vars().card(var) {
                    if value == member[var] {
                        continue;
                    }
                    let mut mutated = member.clone();
                    mutated[var] = value;
                    pool.push((mutated, table.get(var, value)));
                }
            }
        }
        sort_beam(&mut pool);
        let mut next: Vec<(Vec<usize>, f64)> = Vec::with_capacity(k);
        let mut seen: HashSet<&[usize]> = HashSet::new();
        for (x, score) in &pool {
            if next.len() == k {
                break;
            }
            if seen.insert(x.as_slice()) {
                next.push((x.clone(), *score));
            }
        }
        let unchanged = next.len() == beam.len()
            && next.iter().zip(&beam).all(|(a, b)| a.0 == b.0);
        beam = next;
        if unchanged {
            break;
        }
    }

    let assignment = beam[0].0.clone();
    finish(spn, assignment, start, stats)
}

fn sort_beam(beam: &mut [(Vec<usize>, f64)]) {
    beam.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

/// Bottom-up candidate assignments; each sum re-evaluates its sub-circuit
/// once per child to pick the best candidate.
pub fn argmax_product(spn: &Spn) -> SolveResult {
    let start = Instant::now();
    // Candidate (var, value) lists per node, covering the node's scope.
    let mut candidates: Vec<Vec<(usize, usize)>> = Vec::with_capacity(spn.num_nodes());
    for (id, node) in spn.nodes().iter().enumerate() {
        let cand = match node {
            Node::Indicator { var, value } => vec![(*var, *value)],
            Node::Product { children } => children
                .iter()
                .flat_map(|&c| candidates[c].iter().copied())
                .collect(),
            Node::Sum { children, .. } => {
                let mut best: Option<(f64, &Vec<(usize, usize)>)> = None;
                for &c in children {
                    let score = eval_subcircuit(spn, id, &candidates[c]);
                    let better = match &best {
                        None => true,
                        Some((bs, _)) => score > *bs,
                    };
                    if better {
                        best = Some((score, &candidates[c]));
                    }
                }
                best.expect("sums are never childless").1.clone()
            }
        };
        candidates.push(cand);
    }
    let (mut assignment, unconstrained) = base_assignment(spn);
    let stats = SolveStats { unconstrained_vars: unconstrained, ..Default::default() };
    for &(var, value) in &candidates[spn.root()] {
        assignment[var] = value;
    }
    finish(spn, assignment, start, stats)
}

/// Value of the sub-circuit rooted at `top` with `fixed` pinned and the rest
/// of the variables marginalized.
fn eval_subcircuit(spn: &Spn, top: NodeId, fixed: &[(usize, usize)]) -> f64 {
    let mut x = PartialEvidence::full(spn.vars());
    for &(var, value) in fixed {
        x = x.fix(var, value);
    }
    // forward_values computes every node but we only need the prefix; the
    // prefix dominates the cost for the sums that matter.
    let mut values = vec![0.0f64; top + 1];
    for (id, node) in spn.nodes().iter().take(top + 1).enumerate() {
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
    values[top]
}

// ---------------------------------------------------------------------------
// K-Best Tree

/// Provenance of one top-K entry, enough to backtrack its parse tree.
#[derive(Debug, Clone, PartialEq)]
enum Prov {
    Leaf,
    Sum { child_idx: usize, rank: usize },
    Product { ranks: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TopKEntry {
    pub value: f64,
    prov: Prov,
}

/// Ordered multiset of up to K best parse-subtree values with backtracking
/// provenance, sorted by (value desc, child index asc, entry index asc).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TopKList {
    pub entries: Vec<TopKEntry>,
}

impl TopKList {
    #[cfg(test)]
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }
}

/// Max-heap key: larger value first, then smaller index pair.
#[derive(Debug, PartialEq)]
struct HeapItem {
    value: f64,
    a: usize,
    b: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// best_K of the weighted union over sum children, lazily:
/// O(|ch| + K log |ch|) pushes/pops on a heap seeded with each child's best.
pub(crate) fn merge_sum(children: &[&TopKList], weights: &[f64], k: usize) -> TopKList {
    let mut heap: BinaryHeap<HeapItem> = BinaryHeap::with_capacity(children.len());
    for (c, (list, &w)) in children.iter().zip(weights).enumerate() {
        if let Some(first) = list.entries.first() {
            heap.push(HeapItem { value: w * first.value, a: c, b: 0 });
        }
    }
    let mut entries = Vec::with_capacity(k);
    while entries.len() < k {
        let Some(HeapItem { value, a: child_idx, b: rank }) = heap.pop() else {
            break;
        };
        entries.push(TopKEntry { value, prov: Prov::Sum { child_idx, rank } });
        let list = children[child_idx];
        if rank + 1 < list.entries.len() {
            heap.push(HeapItem {
                value: weights[child_idx] * list.entries[rank + 1].value,
                a: child_idx,
                b: rank + 1,
            });
        }
    }
    TopKList { entries }
}

/// best_K of the cross-product over product children via left-to-right
/// pairwise lazy merges: O(K |ch| log K).
pub(crate) fn merge_product(children: &[&TopKList], k: usize) -> TopKList {
    // Accumulator entries carry the per-child ranks gathered so far.
    let mut acc: Vec<(f64, Vec<usize>)> = children[0]
        .entries
        .iter()
        .take(k)
        .enumerate()
        .map(|(r, e)| (e.value, vec![r]))
        .collect();
    for list in &children[1..] {
        acc = merge_pair(&acc, list, k);
    }
    TopKList {
        entries: acc
            .into_iter()
            .map(|(value, ranks)| TopKEntry { value, prov: Prov::Product { ranks } })
            .collect(),
    }
}

fn merge_pair(left: &[(f64, Vec<usize>)], right: &TopKList, k: usize) -> Vec<(f64, Vec<usize>)> {
    let mut heap = BinaryHeap::new();
    let mut visited: HashSet<(usize, usize)> = HashSet::new();
    if !left.is_empty() && !right.entries.is_empty() {
        heap.push(HeapItem { value: left[0].0 * right.entries[0].value, a: 0, b: 0 });
        visited.insert((0, 0));
    }
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let Some(HeapItem { value, a, b }) = heap.pop() else {
            break;
        };
        let mut ranks = left[a].1.clone();
        ranks.push(b);
        out.push((value, ranks));
        if a + 1 < left.len() && visited.insert((a + 1, b)) {
            heap.push(HeapItem { value: left[a + 1].0 * right.entries[b].value, a: a + 1, b });
        }
        if b + 1 < right.entries.len() && visited.insert((a, b + 1)) {
            heap.push(HeapItem { value: left[a].0 * right.entries[b + 1].value, a, b: b + 1 });
        }
    }
    out
}

/// Per-node top-K lists for the whole SPN, in stored order.
pub(crate) fn k_best_lists(spn: &Spn, k: usize) -> Vec<TopKList> {
    let mut lists: Vec<TopKList> = Vec::with_capacity(spn.num_nodes());
    for node in spn.nodes() {
        let list = match node {
            Node::Indicator { .. } => TopKList {
                entries: vec![TopKEntry { value: 1.0, prov: Prov::Leaf }],
            },
            Node::Sum { children, weights } => {
                let refs: Vec<&TopKList> = children.iter().map(|&c| &lists[c]).collect();
                merge_sum(&refs, weights, k)
            }
            Node::Product { children } => {
                let refs: Vec<&TopKList> = children.iter().map(|&c| &lists[c]).collect();
                merge_product(&refs, k)
            }
        };
        lists.push(list);
    }
    lists
}

/// Values of the top K parse trees (descending), without materializing the
/// full multiset.
pub fn k_best_tree_values(spn: &Spn, k: usize) -> Vec<f64> {
    assert!(k >= 1, "K must be at least 1");
    let lists = k_best_lists(spn, k);
    lists[spn.root()].entries.iter().map(|e| e.value).collect()
}

fn backtrack(
    spn: &Spn,
    lists: &[TopKList],
    id: NodeId,
    rank: usize,
    assignment: &mut [usize],
) {
    match (&lists[id].entries[rank].prov, spn.node(id)) {
        (Prov::Leaf, Node::Indicator { var, value }) => assignment[*var] = *value,
        (Prov::Sum { child_idx, rank }, Node::Sum { children, .. }) => {
            backtrack(spn, lists, children[*child_idx], *rank, assignment);
        }
        (Prov::Product { ranks }, Node::Product { children }) => {
            for (&c, &r) in children.iter().zip(ranks) {
                backtrack(spn, lists, c, r, assignment);
            }
        }
        _ => unreachable!("provenance kind matches node kind"),
    }
}

/// Find the top K parse trees, recover their induced samples, score each on
/// the SPN, and return the best. K = 1 reproduces best_tree exactly.
pub fn k_best_trees(spn: &Spn, k: usize) -> SolveResult {
    assert!(k >= 1, "K must be at least 1");
    let start = Instant::now();
    let lists = k_best_lists(spn, k);
    let (base, unconstrained) = base_assignment(spn);
    let stats = SolveStats { unconstrained_vars: unconstrained, ..Default::default() };

    let root = spn.root();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for rank in 0..lists[root].entries.len() {
        let mut assignment = base.clone();
        backtrack(spn, &lists, root, rank, &mut assignment);
        let score = evaluate_assignment(spn, &assignment).unwrap();
        let better = match &best {
            None => true,
            Some((bs, _)) => score > *bs,
        };
        if better {
            best = Some((score, assignment));
        }
    }
    let (score, assignment) = best.expect("root list is never empty");
    SolveResult {
        assignment,
        score,
        status: SolveStatus::Finished,
        elapsed: start.elapsed(),
        zero_mass: score == 0.0,
        stats,
    }
}
