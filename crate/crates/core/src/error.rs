use std::path::PathBuf;

use thiserror::Error;

/// Library-wide error type.
///
/// The CLI maps variants to exit codes: format, shape, dimension, and config
/// errors are usage-class failures (exit 2); I/O and numeric failures are
/// runtime-class (exit 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed on-disk container; `field` names the first violated field.
    #[error("format error in field `{field}`: {detail}")]
    Format { field: &'static str, detail: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A tensor extent does not satisfy a transform precondition.
    #[error("dimension error along {axis}: {detail}")]
    Dimension { axis: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value encountered at training step {step}")]
    NonFinite { step: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(field: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            field,
            detail: detail.into(),
        }
    }

    /// True for errors caused by bad input files or arguments rather than
    /// runtime failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Format { .. } | Error::Shape(_) | Error::Dimension { .. } | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
