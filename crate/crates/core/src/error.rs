use thiserror::Error;

/// Errors raised by the metrics library.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or matrix dimensions do not satisfy an operation's contract.
    #[error("shape error: {0}")]
    Shape(String),

    /// A binary dump or dataset directory is malformed. `offset` is the byte
    /// position at which the problem was detected.
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    /// Input values violate a numeric precondition (NaN, Inf, out of range).
    #[error("invalid input: {0}")]
    Input(String),

    /// A computation produced values outside its guaranteed range.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The statistic is undefined for this input (e.g. a constant representation).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A decoder specification is internally inconsistent.
    #[error("decoder spec error: {0}")]
    Spec(String),

    /// Invalid run configuration or CLI arguments.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
