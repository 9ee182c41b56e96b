//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, assembly, solvers, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on user-supplied data failed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two objects that must share a discretization do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A linear or nonlinear solve could not be completed.
    #[error("solver failure: {0}")]
    Solver(String),

    /// The time stepper exceeded the blow-up guard.
    #[error("solution exceeded blow-up cap {cap:.3e} at t = {t}: sup |u| = {sup:.3e}")]
    BlowUp {
        t: f64,
        sup: f64,
        cap: f64,
        /// Last state below the cap, paired with its time.
        last: Box<(f64, Vec<f64>)>,
    },

    /// A candidate field failed a sub/supersolution precondition.
    #[error("order precondition failed: {0}")]
    OrderPrecondition(String),

    /// Text input (graph, tree, field, matrix, config) could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
}
