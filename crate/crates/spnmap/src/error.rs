//! Error types shared across the crate.

use thiserror::Error;

use crate::spn::ValidationReport;

/// Errors raised while parsing the SPN text format.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: node {node} references child {child} which is not defined yet (forward reference)")]
    ForwardReference { line: usize, node: usize, child: usize },
    #[error("line {line}: node {node} references undefined child {child}")]
    DanglingChild { line: usize, node: usize, child: usize },
    #[error("line {line}: negative weight {weight}")]
    NegativeWeight { line: usize, weight: f64 },
    #[error("structural validation failed: {0}")]
    Invalid(Box<ValidationReport>),
}

/// Errors raised while parsing the tree-BN text format.
#[derive(Debug, Error)]
pub enum BnError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("CPT row for variable {var} sums to {sum}, expected 1 within 1e-9")]
    UnnormalizedCpt { var: usize, sum: f64 },
    #[error("parent relation is not a singly-rooted tree: {0}")]
    NotATree(String),
    #[error("variable {0} has no distribution")]
    MissingCpt(usize),
}

/// Errors raised while parsing or validating a MAP problem.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("query set is empty")]
    EmptyQuery,
    #[error("variable {0} appears in more than one of Q/E/H")]
    Overlap(usize),
    #[error("variable {0} is missing from the Q/E/H partition")]
    Missing(usize),
    #[error("variable {0} is out of range for this SPN")]
    UnknownVariable(usize),
    #[error("evidence value {value} out of range for variable {var}")]
    BadEvidenceValue { var: usize, value: usize },
}

/// Errors from evaluation-style operations.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evidence covers {evidence} variables but the SPN has {spn}")]
    VariableCountMismatch { evidence: usize, spn: usize },
}

/// Parse-tree enumeration refused to materialize an exponential blowup.
#[derive(Debug, Error)]
#[error("SPN has {count} parse trees, above the cap of {cap}")]
pub struct TreeCountOverflow {
    pub count: u128,
    pub cap: u128,
}

/// Exhaustive enumeration refused to run on too large a space.
#[derive(Debug, Error)]
#[error("assignment space has {count} elements, above the cap of {cap}")]
pub struct SpaceTooLarge {
    pub count: u128,
    pub cap: u128,
}
