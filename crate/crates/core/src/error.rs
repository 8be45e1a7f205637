use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArcdError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate design: X'X is singular (condition estimate {condition:.3e})")]
    DegenerateDesign { condition: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("under-identified regression: {used} usable nodes, at least {required} required")]
    UnderIdentified { used: usize, required: usize },

    #[error("no threshold reaches level {level}: available mass is {available}")]
    NoSolution { level: f64, available: f64 },

    #[error("posterior underflow: {0}")]
    Underflow(String),

    #[error("degenerate spike correction: b = {b}, k = {k}")]
    DegenerateSpike { b: f64, k: f64 },

    #[error("too many failed draws: {0}")]
    TooManyFailures(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ArcdError {
    fn from(e: std::io::Error) -> Self {
        ArcdError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ArcdError {
    fn from(e: serde_json::Error) -> Self {
        ArcdError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ArcdError>;
