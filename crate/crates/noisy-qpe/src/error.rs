use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The requested target cannot be met under the model.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Numerical quadrature or root finding did not reach its tolerance.
    #[error("no convergence: {what} (estimated error {estimate:e})")]
    NonConvergence { what: String, estimate: f64 },
    /// Configuration could not be parsed or validated.
    #[error("configuration error: {0}")]
    Config(String),
    /// An internal consistency check failed.
    #[error("internal assertion failed: {0}")]
    Internal(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
