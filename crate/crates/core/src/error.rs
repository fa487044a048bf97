use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing table: {0}")]
    MissingTable(String),

    #[error("malformed header in {table}: expected columns [{}], found [{}]", .expected.join(", "), .found.join(", "))]
    Header {
        table: String,
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: XML error at byte {position}{}: {message}", .element.as_ref().map(|e| format!(" in <{e}>")).unwrap_or_default())]
    Xml {
        path: PathBuf,
        position: u64,
        element: Option<String>,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
