use thiserror::Error;

/// Errors raised by the data model and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OtError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("unbalanced input: total masses differ by {gap:e}")]
    Unbalanced { gap: f64 },

    #[error("instance has {cells} cells, cap is {cap}")]
    SizeCapExceeded { cells: usize, cap: usize },

    #[error("solver failed to converge: {0}")]
    NonConvergence(String),

    #[error("plan is infeasible: marginal violation {violation:e} exceeds {tolerance:e}")]
    InfeasiblePrimal { violation: f64, tolerance: f64 },

    #[error("potentials are not dual feasible: max excess {violation:e}")]
    InfeasibleDual { violation: f64 },

    #[error("kernel entry at index {index} is not positive")]
    NonPositiveKernelEntry { index: usize },

    #[error("regularization strength must be positive, got {0}")]
    EtaNonPositive(f64),

    #[error("Gibbs kernel underflow: min entry {min:e}; use log-domain mode")]
    KernelUnderflow { min: f64 },

    #[error("iteration limit {iterations} reached with violation {violation:e}")]
    MaxIterExceeded { iterations: usize, violation: f64 },

    #[error("expected a square instance, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for OtError {
    fn from(err: std::io::Error) -> Self {
        OtError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for OtError {
    fn from(err: serde_json::Error) -> Self {
        OtError::Parse(err.to_string())
    }
}

impl From<csv::Error> for OtError {
    fn from(err: csv::Error) -> Self {
        OtError::Parse(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, OtError>;
