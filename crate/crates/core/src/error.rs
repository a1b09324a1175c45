use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("value error at row {row}: {message}")]
    RowValue { row: usize, message: String },

    #[error("value error: {0}")]
    Value(String),

    #[error("duplicate egp_id {0} in catalog")]
    DuplicateId(u32),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("record error at line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("join error: essay ids without metadata: {}", .0.join(", "))]
    Join(Vec<String>),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("rule compile error: {0}")]
    Compile(String),

    #[error("no built-in rule for egp_id {0}")]
    NotFound(u32),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("classification error: {0}")]
    Classification(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("catalog error: unknown egp_id {0}")]
    UnknownStatement(u32),

    #[error("undefined: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by an external service rather than by input data.
    pub fn is_external(&self) -> bool {
        matches!(self, Error::Transport(_) | Error::Classification(_))
    }
}
