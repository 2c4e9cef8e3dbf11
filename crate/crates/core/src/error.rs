use thiserror::Error;

/// Errors produced by the model, estimators, and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("no detectable region: detection radius {d_star} m does not exceed line offset {offset} m")]
    NoDetectableRegion { d_star: f64, offset: f64 },

    #[error("{op} requires a single obstacle lane, scenario has {lanes}")]
    MultiLane { op: &'static str, lanes: usize },

    #[error("transmitter coordinates must be strictly increasing and finite")]
    Unsorted,

    #[error("numerical budget exceeded: {what} needs n = {needed}, cap is {cap}; use method=simulate")]
    BudgetExceeded {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("simulation window half-length {have} m is smaller than required {need} m")]
    WindowTooSmall { have: f64, need: f64 },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
