//! The line-based SPN text format.
//!
//! ```text
//! SPN <num_vars>
//! CARD <var> <k>          # optional, default cardinality 2
//! L <var> <val>           # indicator
//! S <child> <w> <child> <w> ...
//! P <child> <child> ...
//! ```
//!
//! Node ids are implicit in file order; children must precede parents; the
//! root is the last node line. `#` starts a comment.

use std::fmt::Write as _;

use crate::error::ParseError;
use crate::spn::{BuildError, Node, Spn, VariableTable};

pub fn parse_spn(text: &str) -> Result<Spn, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            (i + 1, body.trim())
        })
        .filter(|(_, body)| !body.is_empty());

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| syntax(0, "empty document, expected 'SPN <num_vars>' header"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("SPN") {
        return Err(syntax(header_line, "expected 'SPN <num_vars>' header"));
    }
    let num_vars: usize = parse_tok(header_line, toks.next(), "variable count")?;
    if toks.next().is_some() {
        return Err(syntax(header_line, "trailing tokens after SPN header"));
    }
    if num_vars == 0 {
        return Err(syntax(header_line, "variable count must be positive"));
    }

    let mut cards = vec![2usize; num_vars];
    let mut nodes: Vec<Node> = Vec::new();
    let mut node_lines: Vec<usize> = Vec::new();

    for (line, body) in lines {
        let mut toks = body.split_whitespace();
        let tag = toks.next().unwrap();
        match tag {
            "CARD" => {
                if !nodes.is_empty() {
                    return Err(syntax(line, "CARD lines must precede node lines"));
                }
                let var: usize = parse_tok(line, toks.next(), "variable index")?;
                let k: usize = parse_tok(line, toks.next(), "cardinality")?;
                if var >= num_vars {
                    return Err(syntax(line, &format!("variable {var} out of range")));
                }
                if k < 2 {
                    return Err(syntax(line, "cardinality must be >= 2"));
                }
                cards[var] = k;
            }
            "L" => {
                let var: usize = parse_tok(line, toks.next(), "variable index")?;
                let value: usize = parse_tok(line, toks.next(), "value")?;
                if var >= num_vars {
                    return Err(syntax(line, &format!("variable {var} out of range")));
                }
                if value >= cards[var] {
                    return Err(syntax(
                        line,
                        &format!("value {value} out of range for variable {var}"),
                    ));
                }
                nodes.push(Node::Indicator { var, value });
                node_lines.push(line);
            }
            "S" => {
                let id = nodes.len();
                let mut children = Vec::new();
                let mut weights = Vec::new();
                while let Some(ct) = toks.next() {
                    let child: usize = parse_str(line, ct, "child id")?;
                    let weight: f64 = parse_tok(line, toks.next(), "weight")?;
                    check_child(line, id, child)?;
                    if weight < 0.0 || !weight.is_finite() {
                        return Err(ParseError::NegativeWeight { line, weight });
                    }
                    children.push(child);
                    weights.push(weight);
                }
                if children.is_empty() {
                    return Err(syntax(line, "sum node needs at least one child"));
                }
                nodes.push(Node::Sum { children, weights });
                node_lines.push(line);
            }
            "P" => {
                let id = nodes.len();
                let mut children = Vec::new();
                for ct in toks {
                    let child: usize = parse_str(line, ct, "child id")?;
                    check_child(line, id, child)?;
                    children.push(child);
                }
                if children.is_empty() {
                    return Err(syntax(line, "product node needs at least one child"));
                }
                nodes.push(Node::Product { children });
                node_lines.push(line);
            }
            other => return Err(syntax(line, &format!("unknown line tag '{other}'"))),
        }
    }

    if nodes.is_empty() {
        return Err(syntax(header_line, "no node lines"));
    }

    Spn::new(VariableTable::with_cards(cards), nodes).map_err(|e| match e {
        BuildError::Invalid(report) => ParseError::Invalid(report),
        BuildError::BadChildReference { node, child } => ParseError::DanglingChild {
            line: node_lines[node],
            node,
            child,
        },
        other => syntax(0, &other.to_string()),
    })
}

fn check_child(line: usize, node: usize, child: usize) -> Result<(), ParseError> {
    if child >= node {
        // In this format, every dangling reference is a forward reference.
        Err(ParseError::ForwardReference { line, node, child })
    } else {
        Ok(())
    }
}

fn syntax(line: usize, message: &str) -> ParseError {
    ParseError::Syntax { line, message: message.to_string() }
}

fn parse_tok<T: std::str::FromStr>(
    line: usize,
    tok: Option<&str>,
    what: &str,
) -> Result<T, ParseError> {
    match tok {
        Some(t) => parse_str(line, t, what),
        None => Err(syntax(line, &format!("missing {what}"))),
    }
}

fn parse_str<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T, ParseError> {
    tok.parse()
        .map_err(|_| syntax(line, &format!("cannot parse {what} from '{tok}'")))
}

/// Serialize in stored node order. Weights use the shortest representation
/// that round-trips bit-exactly.
pub fn serialize_spn(spn: &Spn) -> String {
    let mut out = String::new();
    let vars = spn.vars();
    writeln!(out, "SPN {}", vars.num_vars()).unwrap();
    for (var, &k) in vars.cards().iter().enumerate() {
        if k != 2 {
            writeln!(out, "CARD {var} {k}").unwrap();
        }
    }
    for node in spn.nodes() {
        match node {
            Node::Indicator { var, value } => writeln!(out, "L {var} {value}").unwrap(),
            Node::Sum { children, weights } => {
                out.push('S');
                for (c, w) in children.iter().zip(weights) {
                    write!(out, " {c} {w}").unwrap();
                }
                out.push('\n');
            }
            Node::Product { children } => {
                out.push('P');
                for c in children {
                    write!(out, " {c}").unwrap();
                }
                out.push('\n');
            }
        }
    }
    out
}
