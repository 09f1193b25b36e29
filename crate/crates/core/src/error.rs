use thiserror::Error;

pub type Result<T> = std::result::Result<T, SdrError>;

#[derive(Debug, Error)]
pub enum SdrError {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("eigensolver did not converge within {iterations} iterations")]
    IterationLimit { iterations: usize },

    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("degenerate direction at iteration {iteration}: {reason}")]
    Degenerate { iteration: usize, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("ingestion error at row {row}, column {column}: {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SdrError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        SdrError::Contract(msg.into())
    }
}
