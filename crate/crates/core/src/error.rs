use std::path::PathBuf;

/// Errors raised anywhere in the crate.
///
/// Each variant belongs to one [`ErrorClass`], which the command-line front
/// end maps onto a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing required config key `{0}`")]
    MissingKey(String),
    #[error("invalid value for `{key}`: {msg}")]
    InvalidValue { key: String, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("input path does not exist: {0}")]
    MissingPath(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("{0} has zero norm")]
    ZeroVector(&'static str),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite {term} at epoch {epoch}, batch {batch}")]
    Divergence {
        epoch: usize,
        batch: usize,
        term: &'static str,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Coarse error classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Divergence,
    Invariant,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::UnknownKey(_)
            | Error::MissingKey(_)
            | Error::InvalidValue { .. }
            | Error::Config(_)
            | Error::MissingPath(_) => ErrorClass::Config,
            Error::Io { .. } | Error::Data(_) | Error::Empty(_) | Error::ZeroVector(_) => {
                ErrorClass::Data
            }
            Error::Divergence { .. } => ErrorClass::Divergence,
            Error::Dimension { .. } | Error::Invariant(_) => ErrorClass::Invariant,
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numeric divergence, 5 invariant.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Divergence => 4,
            ErrorClass::Invariant => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(key: &str, msg: impl Into<String>) -> Self {
        Error::InvalidValue {
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            found,
        })
    }
}
