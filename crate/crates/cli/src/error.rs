use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const RADIUS: i32 = 2;
    pub const BOUND_VIOLATED: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error at {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("radius check failed: |(XX^T)[{i}, {j}]| = {value:e} exceeds r = {radius:e}")]
    Radius {
        i: usize,
        j: usize,
        value: f64,
        radius: f64,
    },

    #[error(transparent)]
    Core(atsp_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Radius { .. } => exit::RADIUS,
            _ => exit::FAILURE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            location: location.into(),
            message: message.into(),
        }
    }
}

impl From<atsp_core::Error> for CliError {
    fn from(e: atsp_core::Error) -> Self {
        match e {
            atsp_core::Error::RadiusViolation { i, j, value, radius } => CliError::Radius { i, j, value, radius },
            other => CliError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
