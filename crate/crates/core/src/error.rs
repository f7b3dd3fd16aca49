use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("isolated start: no waypoint reachable from ({x:.3}, {y:.3})")]
    IsolatedStart { x: f64, y: f64 },

    #[error("map too small: {requested} objects requested but only {available} spawn points available")]
    MapTooSmall { requested: usize, available: usize },

    #[error("no lane near ({x:.3}, {y:.3})")]
    OffRoad { x: f64, y: f64 },

    #[error("non-finite training loss; hazard model parameters diverged")]
    NonFiniteLoss,

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
