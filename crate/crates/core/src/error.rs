//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by problem evaluation, factorization and the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix had the wrong size for the operation.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Requested problem is not registered.
    #[error("unknown problem '{name}'; available: {available}")]
    UnknownProblem { name: String, available: String },

    /// An input contained NaN or infinite entries.
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    /// The constraint Jacobian lost rank where full rank is required.
    #[error("rank-deficient Jacobian: numerical rank {rank} < m = {m}")]
    RankDeficient { rank: usize, m: usize },

    /// A configuration value violates its documented range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Problem manifest could not be parsed or is inconsistent.
    #[error("manifest error: {0}")]
    Manifest(String),

    /// File I/O failure, with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
