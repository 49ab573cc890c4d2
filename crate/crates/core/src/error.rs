use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("point {x} lies outside the domain [{lower}, {upper}]")]
    OutsideDomain { x: f64, lower: f64, upper: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("operation requires a Fourier dictionary, got {0}")]
    Unsupported(String),

    #[error("small-ball probability is undefined for the zero function")]
    ZeroFunction,

    #[error("series sum_k k^(-2nu) diverges for nu = {0} <= 1/2")]
    Divergent(f64),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("empirical Gram matrix is singular (min eigenvalue {min_eigenvalue:e}, ||A|| = {opnorm:e})")]
    SingularGram { min_eigenvalue: f64, opnorm: f64 },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
