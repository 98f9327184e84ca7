use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration.
    #[error("validation error: {0}")]
    Validation(String),
    /// Argument outside the domain where a quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integration did not converge on [{a}, {b}]: estimate {value:e}, error {error:e}")]
    Integration { a: f64, b: f64, value: f64, error: f64 },
    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),
    /// A theorem's hypotheses are not met by the requested configuration.
    #[error("condition not satisfied: {0}")]
    Condition(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    /// Bad input data (NaN, too short, zero denominators).
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
