//! Sum-product network (SPN) MAP/MAX inference toolkit.
//!
//! An SPN is a rooted DAG of indicator, weighted-sum, and product nodes over
//! finite discrete variables. This crate provides:
//!
//! * parsing/serialization of a line-based SPN text format ([`text`]),
//!   structural validation ([`spn`]), and evaluation/derivatives ([`eval`]);
//! * the MAP-to-MAX reduction that folds evidence and hidden variables into
//!   arc weights ([`reduce`]);
//! * an anytime exact branch-and-bound MAX solver ([`exact`]) and five
//!   approximate solvers ([`approx`]);
//! * a compiler from tree-structured Bayesian networks to SPNs ([`bn`]);
//! * seeded random instance generators ([`generate`]) and a benchmark
//!   harness ([`bench`]).
//!
//! Nodes are stored in reverse-topological order: children always precede
//! parents and the root is the last node. Every module relies on that single
//! canonical order.

pub mod approx;
pub mod bench;
pub mod bn;
pub mod error;
pub mod eval;
pub mod evidence;
pub mod exact;
pub mod exhaustive;
pub mod generate;
pub mod reduce;
pub mod result;
pub mod spn;
pub mod text;
pub mod trees;

pub use approx::{
    argmax_product, beam_search, best_tree, k_best_tree_values, k_best_trees, normalized_greedy,
    BeamInit,
};
pub use bn::{bn_to_spn, bn_to_spn_with_stats, parse_bn, CompileStats, TreeBn};
pub use error::{BnError, EvalError, ParseError, ProblemError};
pub use eval::{derivatives, evaluate, evaluate_assignment, DerivativeTable};
pub use evidence::PartialEvidence;
pub use exact::{forward_checking, marginal_checking, max_exact, Initializer, Pruning, SearchConfig};
pub use exhaustive::{brute_force_max, for_each_assignment};
pub use reduce::{map_to_max, parse_problem, parse_problems, simplify, MapProblem};
pub use result::{SolveResult, SolveStats, SolveStatus};
pub use spn::{Node, NodeId, Spn, ValidationReport, VariableTable};
pub use text::{parse_spn, serialize_spn};
pub use trees::{count_parse_trees, enumerate_parse_trees, ParseTree};

/// Canonical two-variable example network used throughout the tests: a sum
/// over two products of per-variable mixtures. Root is node 10; the maximum
/// is S(1, 0) = 0.378 and the best parse tree has value 0.288.
pub const SPN_A: &str = "\
SPN 2
L 0 1
L 0 0
L 1 1
L 1 0
S 0 0.9 1 0.1
S 2 0.2 3 0.8
S 0 0.3 1 0.7
S 2 0.5 3 0.5
P 4 5
P 6 7
S 8 0.4 9 0.6
";
