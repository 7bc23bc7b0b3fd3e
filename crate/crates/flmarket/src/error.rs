use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The exact solver refuses instances beyond its enumeration capacity.
    #[error("instance too large for exact enumeration: n={n}, limit={limit}")]
    OracleCapacity { n: usize, limit: usize },

    /// The bisection oracle observed a win predicate that is not monotone in
    /// the bid, or could not bracket a losing bid.
    #[error("bisection oracle violation: {0}")]
    OracleViolation(String),

    #[error("curve fit failed: {0}")]
    FitFailure(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("parameter file: {0}")]
    ParamFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
