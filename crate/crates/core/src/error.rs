//! Error type shared by every solver module.
//!
//! The CLI maps categories onto exit codes: configuration/domain errors are
//! user-input problems (exit 1), convergence/spectrum failures are physical
//! iteration failures (exit 2), everything else is a numerical/conditioning
//! problem (exit 3). Messages name the invariant that failed.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HfError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("convergence error: {reason} (|dE| trace of last iterations: {trace_tail:?})")]
    Convergence { reason: String, trace_tail: Vec<f64> },

    #[error("spectrum error: {0}")]
    Spectrum(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("conditioning error: {reason}; nearest eigenvalue {nearest:.9e}")]
    Conditioning { reason: String, nearest: f64 },

    #[error("extend-grid error: {0}")]
    ExtendGrid(String),

    #[error("mesh-refinement error: {0}")]
    MeshRefinement(String),

    #[error("degenerate-solution error: {0}")]
    DegenerateSolution(String),

    #[error("instability error: {0}")]
    Instability(String),
}

impl HfError {
    /// Process exit code the CLI reports for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            HfError::Config(_) | HfError::Domain(_) => 1,
            HfError::Convergence { .. } | HfError::Spectrum(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HfError>;
