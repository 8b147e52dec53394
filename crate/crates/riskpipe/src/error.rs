use std::path::PathBuf;

use riskpipe_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse { row: usize, col: usize, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }

    /// Process exit code: 3 for numerical failures, 2 for everything the
    /// user can fix by changing inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
