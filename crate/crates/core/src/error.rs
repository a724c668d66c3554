use std::path::PathBuf;

use crate::qdeckrec::MlpParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("search horizon exhausted (t = {t}, D = {horizon})")]
    HorizonExhausted { t: usize, horizon: usize },

    #[error("instance generation failed: {0}")]
    GenerationFailure(String),

    #[error("insufficient data: need {needed}, have {available}")]
    InsufficientData { needed: usize, available: usize },

    /// Parameters became non-finite. Carries the last finite parameters.
    #[error("training diverged after {episodes} episodes")]
    TrainingDiverged {
        episodes: u64,
        last_finite: Box<MlpParams>,
    },

    #[error("instance too large: {combinations} candidate decks exceed the limit of {limit}")]
    InstanceTooLarge { combinations: f64, limit: u64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
