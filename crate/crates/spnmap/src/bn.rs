//! Tree-structured Bayesian networks and their compilation to SPNs.
//!
//! The compiler builds one sub-circuit per (BN node, value) pair and caches
//! it, so shared substructure is built once and the output size stays linear
//! in the number of CPT parameters.

use std::collections::HashMap;

use crate::error::BnError;
use crate::spn::{Node, NodeId, Spn, VariableTable};

const CPT_ROW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeBn {
    cards: Vec<usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    /// root_cpt[x] = P(root = x)
    root_cpt: Vec<f64>,
    /// cpt[child][parent_val][child_val]; empty for the root.
    cpt: Vec<Vec<Vec<f64>>>,
}

impl TreeBn {
    pub fn new(
        cards: Vec<usize>,
        parent: Vec<Option<usize>>,
        root_cpt: Vec<f64>,
        cpt: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, BnError> {
        let n = cards.len();
        assert_eq!(parent.len(), n);
        assert_eq!(cpt.len(), n);
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(BnError::NotATree("no root".into())),
            many => return Err(BnError::NotATree(format!("multiple roots {many:?}"))),
        };
        // Every non-root must reach the root without cycles.
        for start in 0..n {
            let mut seen = 0usize;
            let mut v = start;
            while let Some(p) = parent[v] {
                seen += 1;
                if seen > n {
                    return Err(BnError::NotATree(format!("cycle through variable {start}")));
                }
                v = p;
            }
            if v != root {
                return Err(BnError::NotATree(format!("variable {start} is detached")));
            }
        }
        let mut children: Vec<Vec<usize>> = vec![vec![]; n];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(v);
            }
        }

        check_row(root, &root_cpt, cards[root])?;
        for v in 0..n {
            if v == root {
                continue;
            }
            let p = parent[v].unwrap();
            if cpt[v].len() != cards[p] {
                return Err(BnError::MissingCpt(v));
            }
            for row in &cpt[v] {
                check_row(v, row, cards[v])?;
            }
        }
        Ok(TreeBn { cards, parent, children, root, root_cpt, cpt })
    }

    pub fn num_vars(&self) -> usize {
        self.cards.len()
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn root_var(&self) -> usize {
        self.root
    }

    /// Joint probability of a complete assignment.
    pub fn joint(&self, x: &[usize]) -> f64 {
        let mut p = self.root_cpt[x[self.root]];
        for v in 0..self.num_vars() {
            if let Some(parent) = self.parent[v] {
                p *= self.cpt[v][x[parent]][x[v]];
            }
        }
        p
    }

    /// Number of CPT parameters (the |B| of the size bound).
    pub fn num_parameters(&self) -> usize {
        let mut total = self.root_cpt.len();
        for v in 0..self.num_vars() {
            if self.parent[v].is_some() {
                total += self.cpt[v].len() * self.cards[v];
            }
        }
        total
    }
}

fn check_row(var: usize, row: &[f64], card: usize) -> Result<(), BnError> {
    if row.len() != card {
        return Err(BnError::MissingCpt(var));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > CPT_ROW_TOL {
        return Err(BnError::UnnormalizedCpt { var, sum });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompileStats {
    pub cache_hits: u64,
    pub cache_entries: u64,
}

/// Compile to an SPN representing the same distribution.
pub fn bn_to_spn(bn: &TreeBn) -> Spn {
    bn_to_spn_with_stats(bn).0
}

pub fn bn_to_spn_with_stats(bn: &TreeBn) -> (Spn, CompileStats) {
    let mut builder = Builder {
        bn,
        nodes: Vec::new(),
        memo: HashMap::new(),
        indicators: HashMap::new(),
        stats: CompileStats::default(),
    };
    let mut children = Vec::with_capacity(bn.cards[bn.root]);
    for x in 0..bn.cards[bn.root] {
        children.push(builder.build(bn.root, x));
    }
    builder.nodes.push(Node::Sum { children, weights: bn.root_cpt.clone() });
    let spn = Spn::new(VariableTable::with_cards(bn.cards.clone()), builder.nodes)
        .expect("compiled SPN is complete and decomposable");
    (spn, builder.stats)
}

struct Builder<'a> {
    bn: &'a TreeBn,
    nodes: Vec<Node>,
    /// (BN node, value) -> root of the compiled sub-circuit.
    memo: HashMap<(usize, usize), NodeId>,
    indicators: HashMap<(usize, usize), NodeId>,
    stats: CompileStats,
}

impl Builder<'_> {
    fn indicator(&mut self, var: usize, value: usize) -> NodeId {
        if let Some(&id) = self.indicators.get(&(var, value)) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Indicator { var, value });
        self.indicators.insert((var, value), id);
        id
    }

    fn build(&mut self, var: usize, value: usize) -> NodeId {
        if let Some(&id) = self.memo.get(&(var, value)) {
            self.stats.cache_hits += 1;
            return id;
        }
        let bn_children = self.bn.children[var].clone();
        let id = if bn_children.is_empty() {
            // A BN leaf compiles to its bare indicator; wrapping it in a
            // unary product would only pad the size bound.
            self.indicator(var, value)
        } else {
            let ind = self.indicator(var, value);
            let mut product_children = vec![ind];
            for c in bn_children {
                let mut grand = Vec::with_capacity(self.bn.cards[c]);
                for x in 0..self.bn.cards[c] {
                    grand.push(self.build(c, x));
                }
                let sum = self.nodes.len();
                self.nodes.push(Node::Sum {
                    children: grand,
                    weights: self.bn.cpt[c][value].clone(),
                });
                product_children.push(sum);
            }
            let pid = self.nodes.len();
            self.nodes.push(Node::Product { children: product_children });
            pid
        };
        self.memo.insert((var, value), id);
        self.stats.cache_entries += 1;
        id
    }
}

/// Parse the BN text format:
///
/// ```text
/// BN <n>
/// CARD <var> <k>
/// ROOT <var> p0 p1 ...
/// EDGE <parent> <child>
/// CPT <child> | <parent_val> : p0 p1 ...
/// ```
pub fn parse_bn(text: &str) -> Result<TreeBn, BnError> {
    let syntax = |line: usize, message: String| BnError::Syntax { line, message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").trim()))
        .filter(|(_, body)| !body.is_empty());

    let (hl, header) = lines
        .next()
        .ok_or_else(|| syntax(0, "empty document, expected 'BN <n>' header".into()))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("BN") {
        return Err(syntax(hl, "expected 'BN <n>' header".into()));
    }
    let n: usize = toks
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| syntax(hl, "bad variable count".into()))?;

    let mut cards = vec![2usize; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut root_cpt: Option<(usize, Vec<f64>)> = None;
    let mut rows: Vec<HashMap<usize, Vec<f64>>> = vec![HashMap::new(); n];

    for (lineno, body) in lines {
        let mut toks = body.split_whitespace();
        match toks.next().unwrap() {
            "CARD" => {
                let var: usize = parse_usize(&mut toks, lineno, "variable")?;
                let k: usize = parse_usize(&mut toks, lineno, "cardinality")?;
                if var >= n || k < 2 {
                    return Err(syntax(lineno, "bad CARD line".into()));
                }
                cards[var] = k;
            }
            "ROOT" => {
                let var: usize = parse_usize(&mut toks, lineno, "variable")?;
                let ps: Vec<f64> = toks
                    .map(|t| t.parse().map_err(|_| syntax(lineno, format!("bad probability '{t}'"))))
                    .collect::<Result<_, _>>()?;
                if var >= n {
                    return Err(syntax(lineno, "root variable out of range".into()));
                }
                root_cpt = Some((var, ps));
            }
            "EDGE" => {
                let p: usize = parse_usize(&mut toks, lineno, "parent")?;
                let c: usize = parse_usize(&mut toks, lineno, "child")?;
                if p >= n || c >= n {
                    return Err(syntax(lineno, "EDGE variable out of range".into()));
                }
                parent[c] = Some(p);
            }
            "CPT" => {
                // CPT <child> | <parent_val> : p0 p1 ...
                let child: usize = parse_usize(&mut toks, lineno, "child")?;
                if toks.next() != Some("|") {
                    return Err(syntax(lineno, "expected '|' in CPT line".into()));
                }
                let pv: usize = parse_usize(&mut toks, lineno, "parent value")?;
                if toks.next() != Some(":") {
                    return Err(syntax(lineno, "expected ':' in CPT line".into()));
                }
                let ps: Vec<f64> = toks
                    .map(|t| t.parse().map_err(|_| syntax(lineno, format!("bad probability '{t}'"))))
                    .collect::<Result<_, _>>()?;
                if child >= n {
                    return Err(syntax(lineno, "CPT variable out of range".into()));
                }
                rows[child].insert(pv, ps);
            }
            other => return Err(syntax(lineno, format!("unknown line tag '{other}'"))),
        }
    }

    let (root, root_ps) = root_cpt.ok_or_else(|| BnError::NotATree("no ROOT line".into()))?;
    let mut cpt: Vec<Vec<Vec<f64>>> = vec![vec![]; n];
    for v in 0..n {
        if v == root {
            continue;
        }
        let Some(p) = parent[v] else {
            return Err(BnError::NotATree(format!("variable {v} has no EDGE")));
        };
        let mut table = Vec::with_capacity(cards[p]);
        for pv in 0..cards[p] {
            let row = rows[v].remove(&pv).ok_or(BnError::MissingCpt(v))?;
            table.push(row);
        }
        cpt[v] = table;
    }
    TreeBn::new(cards, parent, root_ps, cpt)
}

fn parse_usize<'a, I: Iterator<Item = &'a str>>(
    toks: &mut I,
    line: usize,
    what: &str,
) -> Result<usize, BnError> {
    toks.next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| BnError::Syntax { line, message: format!("missing or bad {what}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_assignment;
    use crate::exhaustive::for_each_assignment;

    /// A -> B with P(A=1)=0.7, P(B=1|A=1)=0.2, P(B=1|A=0)=0.9.
    pub(crate) fn chain_ab() -> TreeBn {
        TreeBn::new(
            vec![2, 2],
            vec![None, Some(0)],
            vec![0.3, 0.7],
            vec![vec![], vec![vec![0.1, 0.9], vec![0.8, 0.2]]],
        )
        .unwrap()
    }

    #[test]
    fn chain_fixture_size_and_scores() {
        let bn = chain_ab();
        let spn = bn_to_spn(&bn);
        assert_eq!(spn.num_nodes(), 9);
        assert_eq!(spn.num_arcs(), 10);
        assert!(spn.validate().is_empty());
        let s11 = evaluate_assignment(&spn, &[1, 1]).unwrap();
        assert!((s11 - 0.14).abs() < 1e-12);
        let s00 = evaluate_assignment(&spn, &[0, 0]).unwrap();
        assert!((s00 - 0.03).abs() < 1e-12);
    }

    #[test]
    fn single_variable_bn() {
        let bn = TreeBn::new(vec![2], vec![None], vec![0.3, 0.7], vec![vec![]]).unwrap();
        let spn = bn_to_spn(&bn);
        // Sum root over the two indicators with weights 0.3/0.7.
        assert_eq!(spn.num_nodes(), 3);
        let Node::Sum { weights, .. } = spn.node(spn.root()) else {
            panic!("root must be a sum");
        };
        assert_eq!(weights, &vec![0.3, 0.7]);
    }

    #[test]
    fn chain_abc_caches_shared_subtrees() {
        // A -> B -> C, binary.
        let bn = TreeBn::new(
            vec![2, 2, 2],
            vec![None, Some(0), Some(1)],
            vec![0.4, 0.6],
            vec![
                vec![],
                vec![vec![0.5, 0.5], vec![0.2, 0.8]],
                vec![vec![0.9, 0.1], vec![0.3, 0.7]],
            ],
        )
        .unwrap();
        let (spn, stats) = bn_to_spn_with_stats(&bn);
        assert!(stats.cache_hits > 0);
        // One cache entry per distinct (node, value) pair.
        assert_eq!(stats.cache_entries, 6);
        // Joint matches on all assignments.
        for_each_assignment(bn.cards(), |x| {
            let s = evaluate_assignment(&spn, x).unwrap();
            let p = bn.joint(x);
            assert!((s - p).abs() <= 1e-12);
        });
    }

    #[test]
    fn parse_bn_round_trip_semantics() {
        let doc = "\
BN 2
ROOT 0 0.3 0.7
EDGE 0 1
CPT 1 | 0 : 0.1 0.9
CPT 1 | 1 : 0.8 0.2
";
        let bn = parse_bn(doc).unwrap();
        assert_eq!(bn, chain_ab());
    }

    #[test]
    fn unnormalized_cpt_is_rejected() {
        let doc = "BN 1\nROOT 0 0.5 0.6\n";
        assert!(matches!(parse_bn(doc), Err(BnError::UnnormalizedCpt { var: 0, .. })));
    }

    #[test]
    fn cyclic_parent_relation_is_rejected() {
        let err = TreeBn::new(
            vec![2, 2, 2],
            vec![None, Some(2), Some(1)],
            vec![0.5, 0.5],
            vec![vec![], vec![vec![0.5, 0.5]; 2], vec![vec![0.5, 0.5]; 2]],
        )
        .unwrap_err();
        assert!(matches!(err, BnError::NotATree(_)));
    }

    #[test]
    fn multi_root_is_rejected() {
        let err = TreeBn::new(
            vec![2, 2],
            vec![None, None],
            vec![0.5, 0.5],
            vec![vec![], vec![]],
        )
        .unwrap_err();
        assert!(matches!(err, BnError::NotATree(_)));
    }
}
