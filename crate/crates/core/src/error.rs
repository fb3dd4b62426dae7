//! Error type shared by every module of the crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by model construction, the backward recursions, simulation,
/// and result serialisation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector or matrix did not have the expected dimension.
    #[error("{context}: expected dimension {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A matrix that must be symmetric was not (beyond tolerance).
    #[error("{context}: matrix is not symmetric")]
    NotSymmetric { context: &'static str },

    /// A matrix that must be positive definite failed its Cholesky
    /// factorisation.
    #[error("{context}: matrix is not positive definite")]
    NotPositiveDefinite { context: &'static str },

    /// A matrix that must be positive semidefinite had a significantly
    /// negative eigenvalue.
    #[error("{context}: matrix is not positive semidefinite")]
    NotPositiveSemidefinite { context: &'static str },

    /// A scalar argument that must be strictly positive was not.
    #[error("{name} must be strictly positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },

    /// A scalar argument was outside its admissible range.
    #[error("{context}: {message}")]
    InvalidArgument {
        context: &'static str,
        message: String,
    },

    /// The tangency portfolio is undefined because the excess-return vector
    /// has a zero normalisation `1' Sigma^-1 mu`.
    #[error("tangency portfolio undefined: 1' Sigma^-1 mu is zero")]
    TangencyUndefined,

    /// Too few observations to fit the requested model.
    #[error("{context}: needs at least {needed} observations, got {got}")]
    TooFewObservations {
        context: &'static str,
        needed: usize,
        got: usize,
    },

    /// The regressor matrix of a least-squares fit is rank deficient.
    #[error("least-squares fit: regressor matrix is rank deficient")]
    RankDeficient,

    /// A fully-invested portfolio's weights do not sum to one.
    #[error("weights must sum to 1 for a fully-invested step (sum = {sum})")]
    BudgetViolation { sum: f64 },

    /// An input sequence that must be non-empty was empty.
    #[error("{context}: input is empty")]
    EmptyInput { context: &'static str },

    /// The nested Monte-Carlo recursion was asked for a horizon whose cost
    /// grows beyond the configured depth limit.
    #[error("nested Monte-Carlo horizon {horizon} exceeds the depth limit {max}")]
    HorizonTooDeep { horizon: usize, max: usize },

    /// Riskless-rate calibration could not bracket a root.
    #[error("riskless-rate calibration failed: {message}")]
    Calibration { message: String },

    /// A CSV input could not be parsed; `line` is 1-based and counts the
    /// header as line 1.
    #[error("CSV line {line}: {message}")]
    Csv { line: u64, message: String },

    /// A strategy failed while evaluating one simulated path.
    #[error("strategy evaluation failed on repetition {repetition}: {source}")]
    Strategy {
        repetition: usize,
        #[source]
        source: Box<Error>,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialisation failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
