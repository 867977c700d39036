//! SPN data model and structural validation.
//!
//! Nodes are stored in reverse-topological order: every child precedes its
//! parents, and the root is the last node. This one canonical order is what
//! every bottom-up and top-down pass in the crate iterates over.

use std::fmt;

pub type NodeId = usize;

/// Variable count and per-variable cardinalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableTable {
    cards: Vec<usize>,
}

impl VariableTable {
    /// All variables binary.
    pub fn binary(num_vars: usize) -> Self {
        VariableTable { cards: vec![2; num_vars] }
    }

    pub fn with_cards(cards: Vec<usize>) -> Self {
        assert!(cards.iter().all(|&k| k >= 2), "cardinalities must be >= 2");
        VariableTable { cards }
    }

    pub fn num_vars(&self) -> usize {
        self.cards.len()
    }

    pub fn card(&self, var: usize) -> usize {
        self.cards[var]
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    /// Product of all cardinalities, saturating.
    pub fn total_assignments(&self) -> u128 {
        self.cards
            .iter()
            .fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Leaf indicator lambda_{X_var = value}.
    Indicator { var: usize, value: usize },
    /// Weighted sum; `children` and `weights` are parallel.
    Sum { children: Vec<NodeId>, weights: Vec<f64> },
    Product { children: Vec<NodeId> },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Indicator { .. } => &[],
            Node::Sum { children, .. } => children,
            Node::Product { children } => children,
        }
    }

    pub fn is_sum(&self) -> bool {
        matches!(self, Node::Sum { .. })
    }
}

/// Per-failure-class listing of offending node ids. Empty report == valid SPN.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// Sum nodes whose children do not all share one scope.
    pub incomplete_sums: Vec<NodeId>,
    /// Product nodes with overlapping child scopes.
    pub nondecomposable_products: Vec<NodeId>,
    /// Sum nodes carrying a negative weight.
    pub negative_weights: Vec<NodeId>,
    /// Indicators whose variable or value is out of range.
    pub bad_indicators: Vec<NodeId>,
    /// Nodes not reachable from the root.
    pub unreachable: Vec<NodeId>,
    /// Internal nodes with no children.
    pub childless: Vec<NodeId>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.incomplete_sums.is_empty()
            && self.nondecomposable_products.is_empty()
            && self.negative_weights.is_empty()
            && self.bad_indicators.is_empty()
            && self.unreachable.is_empty()
            && self.childless.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "valid");
        }
        let mut first = true;
        let mut class = |f: &mut fmt::Formatter<'_>, name: &str, ids: &[NodeId]| -> fmt::Result {
            if ids.is_empty() {
                return Ok(());
            }
            if !first {
                write!(f, "; ")?;
            }
            first = false;
            write!(f, "{name}: {ids:?}")
        };
        class(f, "incomplete sums", &self.incomplete_sums)?;
        class(f, "non-decomposable products", &self.nondecomposable_products)?;
        class(f, "negative weights", &self.negative_weights)?;
        class(f, "bad indicators", &self.bad_indicators)?;
        class(f, "unreachable nodes", &self.unreachable)?;
        class(f, "childless internal nodes", &self.childless)?;
        Ok(())
    }
}

/// Errors constructing an `Spn` from raw parts.
#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("no nodes")]
    Empty,
    #[error("node {node} references child {child}, which does not precede it")]
    BadChildReference { node: NodeId, child: NodeId },
    #[error("node {node}: children and weights differ in length")]
    WeightArity { node: NodeId },
    #[error("{0}")]
    Invalid(Box<ValidationReport>),
}

/// A validated sum-product network.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Spn {
    vars: VariableTable,
    nodes: Vec<Node>,
    /// Sorted variable indices per node.
    scopes: Vec<Vec<u32>>,
    root: NodeId,
}

impl Spn {
    /// Build and validate. The root is the last node.
    pub fn new(vars: VariableTable, nodes: Vec<Node>) -> Result<Self, BuildError> {
        if nodes.is_empty() {
            return Err(BuildError::Empty);
        }
        for (id, node) in nodes.iter().enumerate() {
            if let Node::Sum { children, weights } = node {
                if children.len() != weights.len() {
                    return Err(BuildError::WeightArity { node: id });
                }
            }
            for &c in node.children() {
                if c >= id {
                    return Err(BuildError::BadChildReference { node: id, child: c });
                }
            }
        }
        let root = nodes.len() - 1;
        let scopes = compute_scopes(&vars, &nodes);
        let spn = Spn { vars, nodes, scopes, root };
        let report = spn.validate();
        if !report.is_empty() {
            return Err(BuildError::Invalid(Box::new(report)));
        }
        Ok(spn)
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.num_vars()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.nodes.iter().map(|n| n.children().len()).sum()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Sorted scope of a node.
    pub fn scope(&self, id: NodeId) -> &[u32] {
        &self.scopes[id]
    }

    /// Scope of the root, i.e. the variables the SPN actually mentions.
    pub fn root_scope(&self) -> &[u32] {
        &self.scopes[self.root]
    }

    /// Boolean mask over variables: true iff in the root scope.
    pub fn scope_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_vars()];
        for &v in self.root_scope() {
            mask[v as usize] = true;
        }
        mask
    }

    /// Structural checks of Def.-2 style validity. Failures are report
    /// entries, never panics.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Indicator { var, value } => {
                    if *var >= self.vars.num_vars() || *value >= self.vars.card(*var) {
                        report.bad_indicators.push(id);
                    }
                }
                Node::Sum { children, weights } => {
                    if children.is_empty() {
                        report.childless.push(id);
                    }
                    if weights.iter().any(|&w| w < 0.0) {
                        report.negative_weights.push(id);
                    }
                    let complete = children
                        .windows(2)
                        .all(|w| self.scopes[w[0]] == self.scopes[w[1]]);
                    if !complete {
                        report.incomplete_sums.push(id);
                    }
                }
                Node::Product { children } => {
                    if children.is_empty() {
                        report.childless.push(id);
                    }
                    // Disjoint child scopes <=> merged scopes have no duplicates.
                    let mut merged: Vec<u32> = children
                        .iter()
                        .flat_map(|&c| self.scopes[c].iter().copied())
                        .collect();
                    merged.sort_unstable();
                    if merged.windows(2).any(|w| w[0] == w[1]) {
                        report.nondecomposable_products.push(id);
                    }
                }
            }
        }
        let mut reachable = vec![false; self.nodes.len()];
        reachable[self.root] = true;
        for id in (0..self.nodes.len()).rev() {
            if reachable[id] {
                for &c in self.nodes[id].children() {
                    reachable[c] = true;
                }
            }
        }
        for (id, &r) in reachable.iter().enumerate() {
            if !r {
                report.unreachable.push(id);
            }
        }
        report
    }
}

fn compute_scopes(vars: &VariableTable, nodes: &[Node]) -> Vec<Vec<u32>> {
    let mut scopes: Vec<Vec<u32>> = Vec::with_capacity(nodes.len());
    for node in nodes {
        let scope = match node {
            Node::Indicator { var, .. } => {
                // Out-of-range vars still get a scope so validation can report
                // them instead of panicking here.
                let _ = vars;
                vec![*var as u32]
            }
            Node::Sum { children, .. } | Node::Product { children } => {
                let mut merged: Vec<u32> = children
                    .iter()
                    .flat_map(|&c| scopes[c].iter().copied())
                    .collect();
                merged.sort_unstable();
                merged.dedup();
                merged
            }
        };
        scopes.push(scope);
    }
    scopes
}
