use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Shapes, dimensions or settings do not fit together.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// The request is well formed but not supported by this implementation.
    #[error("unsupported: {0}")]
    Capability(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Reading an external dataset failed. `row` is 1-based and counts the header.
    #[error("{}: {message}", location(path, *row))]
    Ingestion {
        path: PathBuf,
        row: Option<usize>,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),

    /// Unknown preset, subcommand argument or config key.
    #[error("usage error: {0}")]
    Usage(String),
}

fn location(path: &std::path::Path, row: Option<usize>) -> String {
    match row {
        Some(row) => format!("{}:{row}", path.display()),
        None => path.display().to_string(),
    }
}

impl Error {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Configuration(_) => "configuration",
            Error::Capability(_) => "capability",
            Error::Numeric(_) => "numeric",
            Error::Ingestion { .. } => "ingestion",
            Error::Io { .. } => "io",
            Error::Serialization(_) => "serialization",
            Error::Usage(_) => "usage",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}

macro_rules! config {
    ($($arg:tt)*) => { $crate::error::Error::Configuration(format!($($arg)*)) };
}

pub(crate) use config;
pub(crate) use domain;
