use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("steering angle {0} rad is at or beyond +/-pi/2")]
    SingularSteering(f64),

    #[error("simulation diverged at t = {time:.3} s: {reason}")]
    Divergence { time: f64, reason: String },

    #[error("trace parse error: {0}")]
    Trace(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
