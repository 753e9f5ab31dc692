use std::path::PathBuf;

use tradenet_core::econometrics::EstimationError;
use tradenet_core::ModelError;

/// Process exit codes. Scripts depend on these values.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
}

/// A config problem tied to a line of the source file when one can be found.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let file = self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<config>".into());
        match self.line {
            Some(l) => write!(f, "{file}:{l}: ")?,
            None => write!(f, "{file}: ")?,
        }
        if self.field.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "`{}` {}", self.field, self.message)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Config(ConfigError),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("estimation: {0}")]
    Estimation(EstimationError),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Input { path: path.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => exit::NUMERIC,
            Error::Model(ModelError::InvalidGeometry(_)) => exit::INPUT,
            Error::Model(_) => exit::NUMERIC,
            Error::Estimation(EstimationError::RankDeficient) => exit::NUMERIC,
            _ => exit::INPUT,
        }
    }
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e)
    }
}

impl From<EstimationError> for Error {
    fn from(e: EstimationError) -> Self {
        Error::Estimation(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
