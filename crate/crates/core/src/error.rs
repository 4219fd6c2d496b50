use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidSpec(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("integration diverged at t = {time} ms (neuron {neuron})")]
    Divergence { time: f64, neuron: usize },

    #[error("need at least {needed} events, got {got}")]
    InsufficientEvents { needed: usize, got: usize },

    #[error("event trains do not overlap in time")]
    EmptyOverlap,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("cannot apply override `{0}`: {1}")]
    Override(String, String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
