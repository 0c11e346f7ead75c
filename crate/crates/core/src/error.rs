use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StefanError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("incompatible data: {0}")]
    Incompatible(String),

    #[error("zero-trace condition violated: {0}")]
    ZeroTrace(String),

    #[error("square-root branch cut: argument {arg:.3e} is within {tol:.1e} of the cut")]
    BranchCut { arg: f64, tol: f64 },

    #[error("contour quadrature did not converge: change {change:.3e} exceeds {tol:.1e}")]
    ContourNonConvergence { change: f64, tol: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("integrator failure on mode {mode}: {reason}")]
    Integrator { mode: usize, reason: String },

    #[error("norm specification: {0}")]
    NormSpec(String),

    #[error("sector specification: {0}")]
    Sector(String),

    #[error("perturbation margin did not reach 1/2 (best {best:.4} at kappa = {kappa})")]
    MarginNotReached { best: f64, kappa: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, StefanError>;

impl From<std::io::Error> for StefanError {
    fn from(e: std::io::Error) -> Self {
        StefanError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for StefanError {
    fn from(e: serde_json::Error) -> Self {
        StefanError::Config(e.to_string())
    }
}

impl From<csv::Error> for StefanError {
    fn from(e: csv::Error) -> Self {
        StefanError::Io(e.to_string())
    }
}
