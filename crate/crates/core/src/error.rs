use std::fmt;
use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by configuration, data ingestion and training.
#[derive(Debug)]
pub enum Error {
    /// Invalid configuration: bad hyperparameter, shape-chain mismatch,
    /// unparsable architecture string, and the like.
    Config(String),
    /// A dataset file could not be read or parsed. `line` is 1-based and
    /// zero when the error is not tied to a specific line.
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    /// Underlying I/O failure while reading or writing a file.
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Training produced a non-finite loss, gradient or parameter.
    Divergence(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Parse {
                path,
                line,
                message,
            } => {
                if *line == 0 {
                    write!(f, "{}: {message}", path.display())
                } else {
                    write!(f, "{}:{line}: {message}", path.display())
                }
            }
            Error::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Error::Divergence(msg) => write!(f, "numerical divergence: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
