//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("mesh invariant violated: {0}")]
    MeshInvariant(String),

    #[error("invalid parameter {name}: {msg}")]
    InvalidParameter { name: &'static str, msg: String },

    #[error("config error ({key}): {msg}")]
    Config { key: String, msg: String },

    #[error("expression error: {0}")]
    Expression(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("active-set iteration did not converge within {max_iters} iterations (history: {history:?})")]
    ActiveSetNonConvergence {
        max_iters: usize,
        history: Vec<usize>,
    },

    #[error("coupling iteration did not converge within {max_iters} iterations{hint}")]
    CouplingNonConvergence {
        max_iters: usize,
        hint: String,
        /// Per-iteration records accumulated before the failure.
        report: Box<crate::fixed_stress::IterationReport>,
    },

    #[error("time step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("usage error: {0}")]
    Usage(String),
}
