use thiserror::Error;

/// Failures raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("vector of length {0} is not a vectorized square matrix")]
    NotPerfectSquare(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid subsystem specification: {0}")]
    Subsystems(String),

    #[error("ill-separated spectrum: cluster distance {distance:e} below {required:e}")]
    IllSeparated { distance: f64, required: f64 },

    #[error("not a dissipative generator: eigenvalue with real part {0:e}")]
    NotDissipative(f64),

    #[error("operator is not hermitian (residual {0:e})")]
    NonHermitian(f64),

    #[error("negative rate {0}")]
    NegativeRate(f64),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("inconsistent block factorization: {0}")]
    BlockFactorization(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("state is not a steady state (residual {0:e})")]
    NotSteady(f64),

    #[error("decomposition did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, Error>;
