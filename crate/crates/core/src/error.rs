use thiserror::Error;

use crate::diagram::Violation;
use crate::graph::DecompositionError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("universes overlap on {0:?}")]
    DomainOverlap(Vec<String>),
    #[error("assignment set is not uniform")]
    NotUniform,
    #[error("scope error: {0}")]
    Scope(String),
    #[error("{what}: {size} exceeds the configured cap of {cap}")]
    Scale {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("out of range: {0}")]
    Range(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid diagram: {0}")]
    Diagram(#[from] Violation),
    #[error("invalid decomposition: {0}")]
    Decomposition(#[from] DecompositionError),
    #[error("soundness failure: {0}")]
    Soundness(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Malformed input (unreadable files, syntax errors) as opposed to a
    /// well-formed object that fails a semantic check.
    pub fn is_malformed(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Malformed(_) | Error::Io(_) | Error::Json(_)
        )
    }

    /// Short machine-readable tag used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DomainOverlap(_) => "domain-overlap",
            Error::NotUniform => "not-uniform",
            Error::Scope(_) => "scope",
            Error::Scale { .. } => "scale",
            Error::Range(_) => "range",
            Error::Precondition(_) => "precondition",
            Error::Diagram(v) => v.kind(),
            Error::Decomposition(_) => "decomposition",
            Error::Soundness(_) => "soundness",
            Error::Parse { .. } => "parse",
            Error::Malformed(_) => "malformed",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
