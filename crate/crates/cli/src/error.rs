use thiserror::Error;

use crate::predictor::PredictorError;

/// Exit codes: 0 success, 1 input error, 2 pipeline stage error, 3 predictor error.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("predictor error: {0}")]
    Predictor(#[from] PredictorError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Stage { .. } => 2,
            CliError::Predictor(_) => 3,
        }
    }

    pub fn input(e: artkit::Error) -> Self {
        CliError::Input(format!("[{}] {e}", e.kind()))
    }

    pub fn stage(stage: &'static str) -> impl FnOnce(artkit::Error) -> CliError {
        move |e| CliError::Stage {
            stage,
            message: format!("[{}] {e}", e.kind()),
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Input(format!("[IoError] {}: {e}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;
