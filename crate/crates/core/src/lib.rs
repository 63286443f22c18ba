//! A desk-scale workbench for decision-DNNF (∧d-FBDD) and its ordered and
//! structured restrictions.
//!
//! The crate provides the assignment algebra, CNF semantics, the ∧d-FBDD
//! diagram model, alignment and restriction of ∧d-OBDDs, the graph families
//! and width parameters used to build hard CNFs, several upper-bound
//! compilers, and a fooling-set lower-bound certification pipeline. Every
//! construction is checkable against a brute-force oracle at small sizes.

pub mod align;
pub mod assign;
pub mod cli;
pub mod cnf;
pub mod compile;
pub mod diagram;
pub mod formula;
pub mod graph;
pub mod lowerbound;
pub mod par;

mod error;

pub use error::{Error, Result};

/// Variable and vertex names. Cheap to clone, ordered lexicographically.
pub type Var = std::sync::Arc<str>;

/// Build identifier embedded in reports and printed by `--version`.
pub const BUILD_ID: &str = concat!("dnnf-lab ", env!("CARGO_PKG_VERSION"));

/// Default cap on the number of variables a brute-force oracle may enumerate.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 22;
