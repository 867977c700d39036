//! Seeded random SPN and tree-BN generators for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bn::TreeBn;
use crate::spn::{Node, NodeId, Spn, VariableTable};

#[derive(Debug, Clone, Copy)]
pub struct SpnGenConfig {
    pub num_vars: usize,
    /// Mixture components per internal region, inclusive bounds.
    pub min_components: usize,
    pub max_components: usize,
}

impl SpnGenConfig {
    pub fn new(num_vars: usize) -> Self {
        SpnGenConfig { num_vars, min_components: 2, max_components: 3 }
    }

    /// Binary splits only; keeps parse-tree counts enumerable.
    pub fn narrow(num_vars: usize) -> Self {
        SpnGenConfig { num_vars, min_components: 2, max_components: 2 }
    }

    /// Allow single-component regions (bare products): node counts grow
    /// roughly linearly in the variable count instead of polynomially.
    pub fn sparse(num_vars: usize) -> Self {
        SpnGenConfig { num_vars, min_components: 1, max_components: 2 }
    }
}

/// Deterministic random complete-and-decomposable SPN over binary variables.
///
/// Built region-style: a region over one variable is a sum over its
/// indicators; a region over several variables is a sum over products, each
/// product splitting the variables in two. Indicators are shared, so the
/// result is a DAG rooted in the final sum.
pub fn random_spn(config: &SpnGenConfig, seed: u64) -> Spn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = VariableTable::binary(config.num_vars);
    let mut nodes: Vec<Node> = Vec::new();
    // Indicators first so every region can share them.
    for var in 0..config.num_vars {
        for value in 0..2 {
            nodes.push(Node::Indicator { var, value });
        }
    }
    let all: Vec<usize> = (0..config.num_vars).collect();
    let root = build_region(&all, config, &mut rng, &mut nodes);
    debug_assert_eq!(root, nodes.len() - 1);
    Spn::new(vars, nodes).expect("generated SPN is valid by construction")
}

fn build_region(
    vars: &[usize],
    config: &SpnGenConfig,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<Node>,
) -> NodeId {
    if vars.len() == 1 {
        let var = vars[0];
        let children = vec![2 * var, 2 * var + 1];
        let weights = vec![rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0)];
        nodes.push(Node::Sum { children, weights });
        return nodes.len() - 1;
    }
    let k = rng.gen_range(config.min_components..=config.max_components);
    let mut children = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for _ in 0..k {
        // Random two-way split of the region's variables.
        let mut shuffled = vars.to_vec();
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        let cut = rng.gen_range(1..shuffled.len());
        let (left, right) = shuffled.split_at(cut);
        let l = build_region(left, config, rng, nodes);
        let r = build_region(right, config, rng, nodes);
        nodes.push(Node::Product { children: vec![l, r] });
        children.push(nodes.len() - 1);
        weights.push(rng.gen_range(0.05..1.0));
    }
    if k == 1 {
        // A one-component region is just its product.
        return children[0];
    }
    nodes.push(Node::Sum { children, weights });
    nodes.len() - 1
}

/// Random SPN with a node count inside [min_nodes, max_nodes]; walks seeds
/// deterministically from `seed` until one fits.
pub fn random_spn_in_size(
    config: &SpnGenConfig,
    seed: u64,
    min_nodes: usize,
    max_nodes: usize,
) -> Spn {
    let mut s = seed;
    loop {
        let spn = random_spn(config, s);
        if (min_nodes..=max_nodes).contains(&spn.num_nodes()) {
            return spn;
        }
        s = s.wrapping_add(0x9e3779b97f4a7c15);
    }
}

/// Deterministic random tree-structured BN.
pub fn random_tree_bn(num_vars: usize, max_card: usize, seed: u64) -> TreeBn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards: Vec<usize> = (0..num_vars).map(|_| rng.gen_range(2..=max_card)).collect();
    // Variable 0 is the root; each later variable picks an earlier parent.
    let parent: Vec<Option<usize>> = (0..num_vars)
        .map(|v| if v == 0 { None } else { Some(rng.gen_range(0..v)) })
        .collect();
    let root_cpt = random_row(&mut rng, cards[0]);
    let cpt: Vec<Vec<Vec<f64>>> = (0..num_vars)
        .map(|v| match parent[v] {
            None => vec![],
            Some(p) => (0..cards[p]).map(|_| random_row(&mut rng, cards[v])).collect(),
        })
        .collect();
    TreeBn::new(cards, parent, root_cpt, cpt).expect("generated BN is a tree with normalized rows")
}

fn random_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}
