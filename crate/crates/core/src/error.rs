use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller passed a value outside an operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A campaign, fuzzer or seed configuration is unusable.
    #[error("configuration error: {0}")]
    Config(String),
    /// The target could not be executed. Never reported as a crash.
    #[error("execution error: {0}")]
    Execution(String),
    /// The requested de-duplication strategy cannot be applied to this data.
    #[error("strategy unavailable: {0}")]
    StrategyUnavailable(String),
    #[error("logic error: {0}")]
    Logic(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
