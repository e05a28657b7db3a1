use std::path::Path;

use geex_core::{EvalError, ExplainError, GridError, ModelError, SamplingError};
use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Shape(String),
    #[error("{0}")]
    Capability(String),
    #[error("{0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Io { .. } => 2,
            CliError::Shape(_) => 3,
            CliError::Capability(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }

    pub fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::ShapeMismatch { .. }
            | GridError::LengthMismatch { .. }
            | GridError::NotTwoDimensional(_) => CliError::Shape(e.to_string()),
            GridError::NonFinite(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::ShapeMismatch { .. } => CliError::Shape(e.to_string()),
            ModelError::NotWhiteBox => CliError::Capability(e.to_string()),
            ModelError::NonFiniteInput(_) => CliError::Numeric(e.to_string()),
            ModelError::Grid(g) => g.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::Grid(g) => g.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ExplainError> for CliError {
    fn from(e: ExplainError) -> Self {
        match e {
            ExplainError::Model(m) => m.into(),
            ExplainError::Sampling(s) => s.into(),
            ExplainError::Grid(g) => g.into(),
            ExplainError::BaselineShape { .. } | ExplainError::MaskMismatch(_) => {
                CliError::Shape(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::ZeroConfidence(_) => CliError::Numeric(e.to_string()),
            EvalError::Explain(x) => x.into(),
            EvalError::Model(m) => m.into(),
            EvalError::Grid(g) => g.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Attaches the model path to parse failures of a model file.
pub fn model_file_error(path: &Path, e: ModelError) -> CliError {
    match e {
        ModelError::Parse { line, message } => CliError::parse(path, line, message),
        ModelError::VersionMismatch { .. } | ModelError::BadLayer { .. } => {
            CliError::parse(path, 0, e.to_string())
        }
        ModelError::Io(message) => CliError::Io {
            path: path.display().to_string(),
            message,
        },
        other => other.into(),
    }
}
