//! Error type for the IO/pipeline layer.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CtsgError>;

#[derive(Debug, Error)]
pub enum CtsgError {
    #[error(transparent)]
    Core(#[from] ctsg_core::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}:{row}:{column}: {message}")]
    Malformed {
        path: String,
        /// 1-based data row.
        row: usize,
        /// 1-based column.
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("bundle format version {found} unsupported (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },
}

impl CtsgError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CtsgError::Invalid(msg.into())
    }

    /// Machine-readable kind tag used by the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            CtsgError::Core(_) => "core",
            CtsgError::Io { .. } => "io",
            CtsgError::Json { .. } => "json",
            CtsgError::Malformed { .. } => "malformed-data",
            CtsgError::Invalid(_) => "invalid",
            CtsgError::FormatVersion { .. } => "format-version",
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> CtsgError {
    CtsgError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn json_err(context: &str, source: serde_json::Error) -> CtsgError {
    CtsgError::Json {
        context: context.to_string(),
        source,
    }
}
