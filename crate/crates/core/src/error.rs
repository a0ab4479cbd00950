use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A formula was evaluated outside its mathematical domain (coth(0), E = 0, ...).
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error at {location}: {message}")]
    Data { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn data_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Data {
        location: location.into(),
        message: message.into(),
    }
}
