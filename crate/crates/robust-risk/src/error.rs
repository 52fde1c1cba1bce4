use thiserror::Error;

/// Errors raised by the library. Extended-real results (`+inf`) are values,
/// not errors; these variants cover the cases where no meaningful value exists.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error("divergence construction failed: {0}")]
    Construction(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("support mismatch: {0}")]
    Support(String),
    #[error("robust risk is infinite: {0}")]
    NonFinite(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("iteration limit reached after {iterations} iterations (best value {best})")]
    IterationLimit { iterations: usize, best: f64 },
    #[error("degenerate solution: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cannot parse '{input}': {reason}")]
    Parse { input: String, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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
