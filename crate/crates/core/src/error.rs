use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("{op}: matrix must be square (got {rows}x{cols})")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("dataset needs at least {required} {what} (got {found})")]
    EmptyDataset {
        what: &'static str,
        required: usize,
        found: usize,
    },
    #[error("feature name {0:?} is empty or duplicated")]
    InvalidFeatureName(String),
    #[error("{op}: input contains a non-finite value at ({row}, {col})")]
    NonFiniteInput {
        op: &'static str,
        row: usize,
        col: usize,
    },
    #[error("gaussian bandwidth must be positive and finite (got {0})")]
    NonPositiveBandwidth(f64),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("row {row} has an empty neighborhood")]
    EmptyNeighborhood { row: usize },
    #[error("row {row} has zero degree")]
    ZeroDegreeRow { row: usize },
    #[error("{op}: matrix has a negative entry at ({row}, {col})")]
    NegativeEntries {
        op: &'static str,
        row: usize,
        col: usize,
    },
    #[error("{op}: matrix is identically zero")]
    ZeroMatrix { op: &'static str },
    #[error("{op}: no convergence after {iterations} iterations")]
    NonConvergence { op: &'static str, iterations: usize },
    #[error("series does not converge: alpha * rho = {product} (alpha = {alpha}, rho = {rho}) must be < 1")]
    ConvergenceBound { alpha: f64, rho: f64, product: f64 },
    #[error("linear system is singular at pivot {pivot}")]
    SingularSystem { pivot: usize },
    #[error("d_model = {d_model} is not divisible by heads = {heads}")]
    Divisibility { d_model: usize, heads: usize },
    #[error("k = {k} is out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("score {index} is not finite")]
    NonFiniteScores { index: usize },
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::ConvergenceBound { .. }
                | Error::SingularSystem { .. }
                | Error::ZeroMatrix { .. }
        )
    }

    pub(crate) fn mismatch(
        op: &'static str,
        expected: impl Into<String>,
        found: impl Into<String>,
    ) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.into(),
            found: found.into(),
        }
    }
}
