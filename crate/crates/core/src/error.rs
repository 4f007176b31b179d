use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested stability criterion does not apply to these parameters.
    #[error("condition not applicable: {0}")]
    NotApplicable(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {message} (condition estimate {condition_estimate:e})")]
    NumericalFailure {
        message: String,
        condition_estimate: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
