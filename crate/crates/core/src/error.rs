use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix rejected: {0}")]
    NotSpd(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    /// The defining integral shows no sign of decaying; `K_g` is likely
    /// infinite for this density.
    #[error("integral appears divergent: {0}")]
    Divergent(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("Monte Carlo failure: {0}")]
    MonteCarlo(String),

    #[error("finite-difference instability: {0}")]
    FiniteDifference(String),

    /// The asymptotic tail expansion was requested below its validity point
    /// (second term at least as large as the first).
    #[error("tail expansion out of range: {0}")]
    ExpansionOutOfRange(String),

    #[error("no p-values at or below tau = {0}")]
    EmptyExceedance(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
