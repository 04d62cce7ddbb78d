use thiserror::Error;

/// Errors raised by kernel construction, operator application and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was asked to evaluate outside its domain of definition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity that must hold for valid inputs did not.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// The assembled linear system could not be factored.
    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
