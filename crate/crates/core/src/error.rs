use thiserror::Error;

/// Errors raised by the sparse kernels, the model builder, the eigensolver
/// and the sensitivity engines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("matrix order must be at least 1")]
    EmptyMatrix,
    #[error("index ({row}, {col}) out of range for order {order}")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        order: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid permutation vector")]
    InvalidPermutation,
    #[error("zero pivot at permuted position {index} (matrix numerically singular)")]
    ZeroPivot { index: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("density {value} of element {element} outside (0, 1]")]
    DensityOutOfRange { element: usize, value: f64 },
    #[error("parameter index {index} out of range for {count} parameters")]
    ParameterOutOfRange { index: usize, count: usize },
    #[error("eigenvalues {first} and {second} of modes {mode} and {next} are repeated to within relative {tolerance}")]
    RepeatedEigenvalue {
        mode: usize,
        next: usize,
        first: f64,
        second: f64,
        tolerance: f64,
    },
    #[error("derivative system of mode {mode} (eigenvalue {lambda}) is singular: the eigenvalue is repeated or precision is exhausted")]
    SingularModeSystem { mode: usize, lambda: f64 },
    #[error("shift {mu} collides with the spectrum: {reason}")]
    ShiftCollision { mu: f64, reason: String },
    #[error("eigensolver did not converge: {0}")]
    EigenNoConvergence(String),
    #[error("vector has non-positive M-norm squared {0}")]
    NonPositiveNorm(f64),
    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,
    #[error("characteristic requires a positive eigenvalue, got {0}")]
    NonPositiveEigenvalue(f64),
    #[error("SQMR breakdown ({kind}) at iteration {iteration}, relative residual {residual:.3e}")]
    SqmrBreakdown {
        kind: &'static str,
        iteration: usize,
        residual: f64,
    },
    #[error("SQMR did not reach tolerance within {iterations} iterations (relative residual {residual:.3e})")]
    SqmrNoConvergence { iterations: usize, residual: f64 },
    #[error("mode crossing while perturbing parameter {parameter}: tracked mode moved from position {expected} to {found}")]
    ModeCrossing {
        parameter: usize,
        expected: usize,
        found: usize,
    },
    #[error("relative error undefined for reference value 0")]
    ZeroReference,
    #[error("efficiency ratio needs a positive reference time, got {0}")]
    NonPositiveTime(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix market: {0}")]
    MatrixMarket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
