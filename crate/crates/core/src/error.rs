use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("non-finite value at index ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("mode cutoff {cutoff} out of range (must be 1 <= N < {limit})")]
    ModeOutOfRange { cutoff: usize, limit: usize },
    #[error("singular tridiagonal system for mode {0}")]
    SingularSystem(usize),
    #[error("invalid time step {0}")]
    InvalidTimeStep(f64),
    #[error("time step {dt} exceeds CFL bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("numerical blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("point ({0}, {1}) is outside the field's domain")]
    Singular(f64, f64),
}

pub type Result<T> = std::result::Result<T, Error>;
