use thiserror::Error;

/// Errors raised by the simulator, the networks and the training loop.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no EVs docked: the per-pile power limit is undefined")]
    DomainEmpty,

    #[error("value {value} outside the allowed domain: {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("pile {pile}: power {power} kW outside [{min}, {max}]")]
    BoundaryViolation {
        pile: usize,
        power: f64,
        min: f64,
        max: f64,
    },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("layer specs differ between networks")]
    SpecMismatch,

    #[error("numerical fault: {0}")]
    NumericalFault(String),

    #[error("replay buffer holds {size} entries, {requested} requested")]
    Underfull { size: usize, requested: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("trace alignment: {0}")]
    Alignment(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Json(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
