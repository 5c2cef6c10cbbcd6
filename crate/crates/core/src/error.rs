use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("infeasible cluster rate: R_b*d_g/(M*v) = {ratio} < 1, no device can upload a packet within one slot")]
    InfeasibleRate { ratio: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("action index {index} out of range (action count {count})")]
    ActionOutOfRange { index: usize, count: usize },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("step called on a finished episode (t = {t})")]
    EpisodeDone { t: u32 },

    #[error("non-finite loss {loss} at training step {step}: {detail}")]
    NonFiniteLoss { step: u64, loss: f64, detail: String },

    #[error("checkpoint decode error: {0}")]
    Checkpoint(String),

    #[error("malformed record: {0}")]
    Format(String),

    #[error("missing input: {0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    /// Whether the error stems from user-supplied configuration rather than
    /// from a failure during a run.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidParams(_) | Error::InfeasibleRate { .. } | Error::Config(_) | Error::TomlDe(_))
    }
}
