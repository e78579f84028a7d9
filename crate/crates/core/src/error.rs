use thiserror::Error;

/// Errors raised by the matrix primitives, solvers and certifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmopError {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    Dimension {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("matrix is numerically singular: {detail}")]
    Singular { detail: String },

    #[error("largest-eigenvalue estimation failed after {restarts} restarts")]
    PowerIteration { restarts: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("row {row} is active but has zero norm, multiplier cannot be recovered")]
    DegenerateRow { row: usize },

    #[error("active-set enumeration limited to N <= {max}, got N = {n}")]
    EnumerationGuard { n: usize, max: usize },

    #[error(
        "no active set satisfied the KKT conditions; best candidate {best_set:?} \
         with worst residual {best_residual:e}"
    )]
    OracleFailure {
        best_set: Vec<usize>,
        best_residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, CmopError>;

pub(crate) fn dim_err(op: &'static str, expected: (usize, usize), found: (usize, usize)) -> CmopError {
    CmopError::Dimension {
        op,
        expected: format!("{}x{}", expected.0, expected.1),
        found: format!("{}x{}", found.0, found.1),
    }
}
