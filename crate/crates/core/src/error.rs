//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("sort error: {0}")]
    Sort(String),

    #[error("elaboration error: {0}")]
    Elaborate(String),

    #[error("unsupported construct: {0}")]
    Unsupported(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("solver timeout after {0} ms")]
    Timeout(u64),

    #[error("external solver failure: {0}")]
    External(String),

    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error("guarantee violated at runtime: {0}")]
    Violation(String),

    #[error("range generator contract violated: {0}")]
    RngContract(String),

    #[error("model does not satisfy formula: {0}")]
    ModelMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the command-line driver maps this error to. A timeout is an
    /// indeterminate verdict, not an internal failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Indeterminate(_) | Error::Timeout(_) => 2,
            _ => 70,
        }
    }
}
