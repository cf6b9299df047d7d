use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tensor product dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator contains non-finite entries")]
    NonFinite,

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid subsystem selector: {0}")]
    InvalidSelector(String),

    #[error("invalid cell spec: {0}")]
    InvalidCellSpec(String),

    #[error("ancilla index {index} is not valid here (cell has m = {m})")]
    InvalidAncilla { index: usize, m: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("state is outside the measurement protocol's support: {0}")]
    UnsupportedState(String),

    #[error("trace drifted by {drift:e} at t = {time}; the time step is too large")]
    TraceDrift { drift: f64, time: f64 },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("routing failed: {0}")]
    Routing(String),

    #[error("instruction {index}: {reason}")]
    Compile { index: usize, reason: String },

    #[error("schedule invariant violated: {0}")]
    ScheduleInvariant(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
