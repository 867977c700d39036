//! MAP-to-MAX reduction: condition on evidence, sum out hidden variables
//! into arc weights, and project the SPN onto the query variables.

use crate::error::ProblemError;
use crate::spn::{Node, Spn, VariableTable};

/// Disjoint partition Q/E/H of the variables plus an evidence assignment
/// over E. Q is never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapProblem {
    query: Vec<usize>,
    evidence: Vec<(usize, usize)>,
    hidden: Vec<usize>,
}

impl MapProblem {
    pub fn new(
        vars: &VariableTable,
        mut query: Vec<usize>,
        mut evidence: Vec<(usize, usize)>,
        mut hidden: Vec<usize>,
    ) -> Result<Self, ProblemError> {
        query.sort_unstable();
        query.dedup();
        evidence.sort_unstable();
        hidden.sort_unstable();
        hidden.dedup();
        if query.is_empty() {
            return Err(ProblemError::EmptyQuery);
        }
        let n = vars.num_vars();
        let mut part = vec![0u8; n];
        let mut place = |var: usize, tag: u8| -> Result<(), ProblemError> {
            if var >= n {
                return Err(ProblemError::UnknownVariable(var));
            }
            if part[var] != 0 {
                return Err(ProblemError::Overlap(var));
            }
            part[var] = tag;
            Ok(())
        };
        for &q in &query {
            place(q, 1)?;
        }
        for &(e, value) in &evidence {
            place(e, 2)?;
            if value >= vars.card(e) {
                return Err(ProblemError::BadEvidenceValue { var: e, value });
            }
        }
        for &h in &hidden {
            place(h, 3)?;
        }
        if let Some(var) = part.iter().position(|&p| p == 0) {
            return Err(ProblemError::Missing(var));
        }
        Ok(MapProblem { query, evidence, hidden })
    }

    /// Full-MAX problem: everything is a query variable.
    pub fn full_max(vars: &VariableTable) -> Self {
        MapProblem {
            query: (0..vars.num_vars()).collect(),
            evidence: vec![],
            hidden: vec![],
        }
    }

    pub fn query(&self) -> &[usize] {
        &self.query
    }

    pub fn evidence(&self) -> &[(usize, usize)] {
        &self.evidence
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }
}

/// Return a new SPN S' over Q with S'(q) = S({q} x {e} x val(H)) for all q.
///
/// The input is never mutated. If the root is not a sum it is first wrapped
/// in a single-child sum of weight 1, invisibly to the caller. Products left
/// with a single child after node removal are kept as unary products.
pub fn map_to_max(spn: &Spn, problem: &MapProblem) -> Spn {
    debug_assert_eq!(
        spn.num_vars(),
        problem.query.len() + problem.evidence.len() + problem.hidden.len()
    );

    let mut nodes: Vec<Node> = spn.nodes().to_vec();
    if !nodes[spn.root()].is_sum() {
        nodes.push(Node::Sum { children: vec![spn.root()], weights: vec![1.0] });
    }

    let n = spn.num_vars();
    let mut summed_out = vec![false; n]; // E union H
    let mut e_val: Vec<Option<usize>> = vec![None; n];
    for &(var, value) in &problem.evidence {
        summed_out[var] = true;
        e_val[var] = Some(value);
    }
    for &h in &problem.hidden {
        summed_out[h] = true;
    }

    // Scopes including the wrapper sum, and the subset test sc(N) <= E u H.
    let mut scope_in_eh = vec![true; nodes.len()];
    {
        let mut scopes: Vec<Vec<u32>> = Vec::with_capacity(nodes.len());
        for (id, node) in nodes.iter().enumerate() {
            let scope: Vec<u32> = match node {
                Node::Indicator { var, .. } => vec![*var as u32],
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
            scope_in_eh[id] = scope.iter().all(|&v| summed_out[v as usize]);
            scopes.push(scope);
        }
    }

    // Bottom-up accumulation of node values into arc weights (the stored
    // order is already reverse-topological).
    let mut w = vec![1.0f64; nodes.len()];
    for id in 0..nodes.len() {
        match &mut nodes[id] {
            Node::Indicator { var, value } => {
                if let Some(e) = e_val[*var] {
                    if e != *value {
                        w[id] = 0.0;
                    }
                }
            }
            Node::Sum { children, weights } => {
                for (c, wt) in children.iter().zip(weights.iter_mut()) {
                    *wt *= w[*c];
                }
                if scope_in_eh[id] {
                    w[id] = weights.iter().sum();
                }
                // Otherwise w stays 1.
            }
            Node::Product { children } => {
                w[id] = children.iter().map(|&c| w[c]).product();
            }
        }
    }

    // Remove every node whose scope sits inside E u H, remapping ids.
    let mut remap: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut kept: Vec<Node> = Vec::new();
    for (id, node) in nodes.into_iter().enumerate() {
        if scope_in_eh[id] {
            continue;
        }
        let node = match node {
            Node::Indicator { .. } => node,
            Node::Sum { children, weights } => {
                // A kept sum keeps all its children: completeness makes the
                // child scopes equal to the sum's.
                let children: Vec<usize> = children.iter().map(|&c| remap[c].unwrap()).collect();
                Node::Sum { children, weights }
            }
            Node::Product { children } => {
                let children: Vec<usize> = children
                    .into_iter()
                    .filter_map(|c| remap[c])
                    .collect();
                Node::Product { children }
            }
        };
        remap[id] = Some(kept.len());
        kept.push(node);
    }

    let reduced = Spn::new(spn.vars().clone(), kept)
        .expect("reduction of a valid SPN stays valid");
    debug_assert_eq!(
        reduced.root_scope(),
        problem
            .query
            .iter()
            .map(|&q| q as u32)
            .collect::<Vec<_>>()
            .as_slice()
    );
    reduced
}

/// Optional cleanup pass: drop zero-weight sum arcs, splice unary products,
/// and remove nodes that become unreachable. Off by default everywhere;
/// semantics-preserving.
pub fn simplify(spn: &Spn) -> Spn {
    // forward[id] = replacement id in the new node list, filled bottom-up.
    let mut nodes: Vec<Node> = Vec::new();
    let mut forward: Vec<usize> = vec![usize::MAX; spn.num_nodes()];
    for (id, node) in spn.nodes().iter().enumerate() {
        let new_node = match node {
            Node::Indicator { .. } => node.clone(),
            Node::Sum { children, weights } => {
                let mut cs = Vec::new();
                let mut ws = Vec::new();
                for (&c, &wt) in children.iter().zip(weights) {
                    if wt != 0.0 {
                        cs.push(forward[c]);
                        ws.push(wt);
                    }
                }
                if cs.is_empty() {
                    // All-zero sum: keep one arc so the node stays well formed.
                    cs.push(forward[children[0]]);
                    ws.push(0.0);
                }
                Node::Sum { children: cs, weights: ws }
            }
            Node::Product { children } => {
                if children.len() == 1 {
                    // Splice: the product is its only child.
                    forward[id] = forward[children[0]];
                    continue;
                }
                Node::Product {
                    children: children.iter().map(|&c| forward[c]).collect(),
                }
            }
        };
        forward[id] = nodes.len();
        nodes.push(new_node);
    }

    // Drop nodes no longer reachable from the root and compact ids.
    let root = forward[spn.root()];
    let mut reachable = vec![false; nodes.len()];
    reachable[root] = true;
    for id in (0..=root).rev() {
        if reachable[id] {
            for &c in nodes[id].children() {
                reachable[c] = true;
            }
        }
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut compact: Vec<Node> = Vec::new();
    for (id, node) in nodes.into_iter().enumerate() {
        if id > root || !reachable[id] {
            continue;
        }
        let node = match node {
            Node::Indicator { .. } => node,
            Node::Sum { children, weights } => Node::Sum {
                children: children.into_iter().map(|c| remap[c]).collect(),
                weights,
            },
            Node::Product { children } => Node::Product {
                children: children.into_iter().map(|c| remap[c]).collect(),
            },
        };
        remap[id] = compact.len();
        compact.push(node);
    }
    Spn::new(spn.vars().clone(), compact).expect("simplification preserves validity")
}

/// Parse one problem line: `q:<comma list|-> e:<var>=<val>,...|- h:<comma list|->`.
pub fn parse_problem(line: &str, vars: &VariableTable) -> Result<MapProblem, ProblemError> {
    parse_problem_at(line, 1, vars)
}

fn parse_problem_at(
    line: &str,
    lineno: usize,
    vars: &VariableTable,
) -> Result<MapProblem, ProblemError> {
    let syntax = |message: String| ProblemError::Syntax { line: lineno, message };
    let mut query = None;
    let mut evidence = None;
    let mut hidden = None;
    for field in line.split_whitespace() {
        let (tag, body) = field
            .split_once(':')
            .ok_or_else(|| syntax(format!("expected '<tag>:<body>', got '{field}'")))?;
        match tag {
            "q" => {
                query = Some(parse_index_list(body).map_err(&syntax)?);
            }
            "h" => {
                hidden = Some(parse_index_list(body).map_err(&syntax)?);
            }
            "e" => {
                let mut pairs = Vec::new();
                if body != "-" {
                    for item in body.split(',') {
                        let (v, x) = item
                            .split_once('=')
                            .ok_or_else(|| syntax(format!("expected '<var>=<val>' in '{item}'")))?;
                        let var = v
                            .parse()
                            .map_err(|_| syntax(format!("bad variable index '{v}'")))?;
                        let val = x
                            .parse()
                            .map_err(|_| syntax(format!("bad value '{x}'")))?;
                        pairs.push((var, val));
                    }
                }
                evidence = Some(pairs);
            }
            other => return Err(syntax(format!("unknown field tag '{other}'"))),
        }
    }
    let (Some(query), Some(evidence), Some(hidden)) = (query, evidence, hidden) else {
        return Err(syntax("problem line needs q:, e: and h: fields".into()));
    };
    MapProblem::new(vars, query, evidence, hidden)
}

fn parse_index_list(body: &str) -> Result<Vec<usize>, String> {
    if body == "-" {
        return Ok(vec![]);
    }
    body.split(',')
        .map(|t| t.parse().map_err(|_| format!("bad variable index '{t}'")))
        .collect()
}

/// Parse a problem file, one problem per line, '#' comments allowed.
pub fn parse_problems(text: &str, vars: &VariableTable) -> Result<Vec<MapProblem>, ProblemError> {
    let mut problems = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        problems.push(parse_problem_at(body, i + 1, vars)?);
    }
    Ok(problems)
}
