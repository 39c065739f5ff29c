use thiserror::Error;

/// Errors surfaced by the simulator, learner and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("gradient cache is stale (cache generation {cache}, network generation {network})")]
    StaleCache { cache: u64, network: u64 },

    #[error("episode already finished; call reset first")]
    EpisodeFinished,

    #[error("replay buffer holds {size} transitions, cannot sample a batch of {batch}")]
    Underfilled { size: usize, batch: usize },

    #[error("invalid config: `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("checkpoint not found at {0}; run `train` first to produce one")]
    MissingCheckpoint(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid config: {}", .0.message().trim())]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}
