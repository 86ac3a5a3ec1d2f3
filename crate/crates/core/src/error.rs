use thiserror::Error;

/// Errors produced by the numerical engine.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("angle value {0} outside the domain of the prescribed function")]
    Domain(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("singular boundary: theta = {0} is not an interior phase-plane angle")]
    SingularBoundary(f64),

    #[error("first integral undefined: prescribed function vanishes at y = {0} inside the moment range")]
    UndefinedFirstIntegral(f64),

    #[error("quadrature did not reach the requested accuracy (estimate {estimate}, error {error})")]
    Accuracy { estimate: f64, error: f64 },

    #[error("improper integral diverges (partial sum {partial})")]
    Divergent { partial: f64 },

    #[error("no contraction window found for the radial fixed point (delta fell below {0})")]
    NoContraction(f64),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("degenerate profile: {0}")]
    Degenerate(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
