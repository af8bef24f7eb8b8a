use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IfsError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A letter does not name a map of the (truncated) family.
    #[error("index error: letter {letter} is not in 1..={n}")]
    Index { letter: u32, n: usize },

    /// Evaluating a map failed (expression error, uncovered point, non-finite image).
    #[error("map error: {0}")]
    Map(String),

    /// Expression or word syntax error at a 1-based column.
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    /// Semantically invalid configuration; `path` names the offending field.
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    /// A tail sum was requested from a comparison function without a certificate,
    /// or the certificate could not be applied.
    #[error("tail not certifiable: {0}")]
    TailNotCertifiable(String),

    /// Iteration or point budget exhausted.
    #[error("resource error: {0}")]
    Resource(String),
}

impl IfsError {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        IfsError::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, IfsError>;
