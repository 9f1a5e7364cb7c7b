//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised while building or solving randomness-certification problems.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (minimum eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("trace {found} differs from the required {expected}")]
    BadTrace { expected: f64, found: f64 },

    #[error("measurement effects do not sum to the identity (deviation {0:.3e})")]
    NotComplete(f64),

    #[error("invalid statistics table: {0}")]
    InvalidStatistics(String),

    #[error("malformed SDP: {0}")]
    MalformedSdp(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("solver stopped without certifying optimality: {0}")]
    SolverFailure(String),

    #[error("outcome-string count {required} exceeds the configured cap {cap}")]
    CapExceeded { required: usize, cap: usize },

    #[error("inconsistent operator algebra: relation between {left} and {right} fails")]
    InconsistentAlgebra { left: String, right: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
