use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = NudgeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NudgeError {
    #[error("matrix must have at least one row and one column (got {rows}x{dim})")]
    EmptyMatrix { rows: usize, dim: usize },

    #[error("matrix buffer has {actual} values, expected {expected}")]
    BufferLength { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {what} has dimension {actual}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("duplicate label for query {query}, record {record}")]
    DuplicateLabel { query: usize, record: usize },

    #[error("relevance must be positive and finite (query {query}, record {record}, got {relevance})")]
    BadRelevance {
        query: usize,
        record: usize,
        relevance: f64,
    },

    #[error("every query must be labeled (query {query} has no label)")]
    UnlabeledQuery { query: usize },

    #[error("query {query} has {count} labels; this method requires single-label validation queries (use the grid selector instead)")]
    MultiLabelQuery { query: usize, count: usize },

    #[error("row {row} has zero norm and cannot be normalized")]
    ZeroRow { row: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl NudgeError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        NudgeError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
