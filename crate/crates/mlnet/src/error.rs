//! Crate-wide error type.
//!
//! Errors are grouped into the categories the CLI maps to exit codes:
//! usage (1), data (2), numerical (3). Library callers match on the
//! variants directly.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible shapes (e.g. label vector length vs. matrix side).
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// Input violates a precondition (empty network, K > n, rho outside (0,1), ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An iterative numerical routine failed to converge.
    #[error("numerical failure in {routine}: no convergence after {iterations} iterations (residual {residual:.3e}, tolerance {tolerance:.3e})")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    /// A quantity that must be finite and positive was not.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed text input (edge lists, config files, trace CSVs).
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Bad configuration value or missing required key.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI reports for this error: 2 for data problems,
    /// 3 for numerical failures. Usage errors (1) never reach this path;
    /// they are produced by argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoConvergence { .. } | Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}
