use thiserror::Error;

use crate::eos::ConvexityReport;

/// Everything that can go wrong in the laboratory.
///
/// The variants are grouped by the exit-code class the command-line driver
/// maps them onto: configuration (2), numerical failure (3) and invariant
/// violation (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("certification failed: {reason}")]
    Certification {
        reason: String,
        report: Box<ConvexityReport>,
    },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error at line {line} ({key}): {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("Picard iteration did not converge after {} iterations (residuals {:?})", .residuals.len(), .residuals)]
    NonConvergence { residuals: Vec<f64> },

    #[error("velocity coefficients diverged (|v| = {0:e})")]
    Divergence(f64),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("step at t = {t} failed: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Strips [`Error::AtTime`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code for the command-line contract.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Parse { .. } | Error::Validation(_) | Error::Format(_) | Error::Io(_) => 2,
            Error::InvariantViolation(_) | Error::Certification { .. } => 4,
            _ => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::Domain(_) => "domain",
            Error::Certification { .. } => "certification",
            Error::Resolution(_) => "resolution",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Solver(_) => "solver",
            Error::Assembly(_) => "assembly",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Divergence(_) => "divergence",
            Error::InvariantViolation(_) => "invariant_violation",
            Error::AtTime { .. } => unreachable!(),
            Error::Io(_) => "io",
            Error::Format(_) => "format",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
