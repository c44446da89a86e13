use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the statistics engine.
///
/// Group, row and observation positions are zero-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-positive value in group {group} at position {index}; cannot log-transform")]
    NonPositiveValue { group: usize, index: usize },

    #[error("contrast row {0} does not sum to zero")]
    RowSumNonZero(usize),

    #[error("contrast row {0} is all zero")]
    ZeroRow(usize),

    #[error("contrast matrix has no rows")]
    NoContrasts,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("at least two groups are required, found {0}")]
    TooFewGroups(usize),

    #[error("group {0} is empty")]
    EmptyGroup(usize),

    #[error("pooled variance has zero degrees of freedom")]
    DegenerateVariance,

    #[error("pooled variance is zero")]
    ZeroVariance,

    #[error("dataset is on the raw scale; log-transform it first")]
    RawScale,

    #[error("non-finite observation in group {group} at position {index}")]
    NonFiniteValue { group: usize, index: usize },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is not positive semi-definite")]
    IndefiniteMatrix,

    #[error("covariance has rank {rank} < dimension {dim}; density undefined")]
    SingularSigma { rank: usize, dim: usize },

    #[error("all observations are tied")]
    AllTied,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration budget exhausted: error {error:.3e} above tolerance {tolerance:.3e}")]
    BudgetExhausted { error: f64, tolerance: f64 },
}
