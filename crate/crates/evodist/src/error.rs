//! Crate-wide error type.
//!
//! Validation failures name the offending parameter or config key so CLI
//! users see actionable messages; solver failures carry enough state
//! (step index, iteration counts, residuals) to diagnose a run post mortem.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric or structural parameter violates its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Dirichlet elimination would remove every unknown.
    #[error("boundary conditions constrain all {n} nodes; no unknowns remain")]
    AllNodesConstrained { n: usize },

    /// Conjugate-gradient iteration hit its cap before meeting the
    /// residual contract.
    #[error(
        "linear solve did not converge within {max_iterations} iterations \
         (relative residual {relative_residual:.3e}, target {rel_tol:.3e})"
    )]
    LinearSolveDiverged {
        max_iterations: usize,
        relative_residual: f64,
        rel_tol: f64,
    },

    /// Fixed-point iteration within one implicit step failed to settle.
    #[error(
        "fixed-point iteration diverged at step {step}: {iterations} iterations, \
         last relative change {last_change:.3e} (target {tol:.3e})"
    )]
    PicardDiverged {
        step: usize,
        iterations: usize,
        last_change: f64,
        tol: f64,
    },

    /// A stationary-mode run exhausted its step budget.
    #[error(
        "stationary state not reached within {steps} steps \
         (last step-to-step change {metric:.3e}, target {tol_s:.3e})"
    )]
    StationaryNotReached { steps: usize, metric: f64, tol_s: f64 },

    /// Malformed config text (bad syntax, unknown or duplicate key).
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// Malformed snapshot file.
    #[error("snapshot parse error at line {line}: {message}")]
    SnapshotParse { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
