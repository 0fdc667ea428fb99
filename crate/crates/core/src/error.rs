use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("index {index} out of bounds (len {len})")]
    Bounds { index: usize, len: usize },

    #[error("ingestion error at {path}: {message}")]
    Ingestion { path: PathBuf, message: String },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("harmonization error: {0}")]
    Harmonization(String),

    #[error("imputation error: {0}")]
    Imputation(String),

    #[error("lookup error: no feature named `{0}`")]
    Lookup(String),

    #[error("training error at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("training error: non-finite gradient for `{parameter}`")]
    NonFiniteGradient { parameter: String },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn ingestion(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Ingestion {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit status for the command-line front end.
    ///
    /// 2 is a configuration problem, 3 a data or contract problem, 4 a
    /// numeric or training failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Numeric(_)
            | Error::DegenerateInput(_)
            | Error::Training { .. }
            | Error::NonFiniteGradient { .. }
            | Error::Domain(_) => 4,
            _ => 3,
        }
    }
}
