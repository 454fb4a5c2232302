use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("layer {layer}: {message}")]
    Invariant { layer: u32, message: String },

    #[error("network invariant violated: {0}")]
    Network(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("capacity exceeded for layer {layer}: {message}")]
    Capacity { layer: u32, message: String },

    #[error("schedule verification failed: {0} violation(s)")]
    Verification(usize),

    #[error("weights file malformed: {0}")]
    Weights(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
