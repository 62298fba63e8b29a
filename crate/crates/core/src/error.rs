use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("curve start does not match lift start point (distance {0:e})")]
    StartMismatch(f64),

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("vector is not horizontal (residual {residual:e})")]
    NotHorizontal { residual: f64 },

    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("infeasible boundary data: {0}")]
    Infeasible(String),

    #[error("wrong case: {0}")]
    WrongCase(String),

    #[error("vertical coordinate ({0}, {1}) is already fixed")]
    AlreadyFixed(usize, usize),

    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("horizontal map is not surjective onto the target horizontal layer")]
    NotSurjective,

    #[error("times must be strictly increasing (index {0})")]
    NonMonotoneTimes(usize),

    #[error("{0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
