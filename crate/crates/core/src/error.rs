use thiserror::Error;

/// Everything that can go wrong in the structural pipeline or the numeric checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular")]
    SingularMatrix,

    #[error("dimension mismatch in {field}: {detail}")]
    DimensionMismatch { field: &'static str, detail: String },

    #[error("pivot rows do not span the row space (row {row} is independent of them)")]
    NotSpanning { row: usize },

    #[error("pivot rows are linearly dependent")]
    DependentPivots,

    #[error("state component {index} is not strictly positive ({value})")]
    NonPositiveState { index: usize, value: f64 },

    #[error("{op} is not applicable: {reason}")]
    NotApplicable { op: &'static str, reason: String },

    #[error("no quasimonomial row yields a new-time transformation with maximal rank of A")]
    NoSuitableRow,

    #[error("system is not in standard form: {0}")]
    NotStandardized(String),

    #[error("invalid embedding mode: {0}")]
    BadMode(String),

    #[error("no invertible {n}x{n} column block of A exists")]
    SingularBlock { n: usize },

    #[error("trajectory left the positive orthant at t = {t}")]
    PositivityLost { t: f64 },

    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(field: &'static str, detail: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            field,
            detail: detail.into(),
        }
    }
}
