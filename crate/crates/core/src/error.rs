use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar parameter outside the range an operation accepts.
    #[error("{name} = {value} is outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("region has a single point along every axis and cannot be split")]
    CannotSplit,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("hypothesis set is empty")]
    EmptyHypotheses,

    #[error("sensors are not placed symmetrically about the split midpoint: {0}")]
    AsymmetricSensors(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid sensor policy: {0}")]
    InvalidPolicy(String),

    #[error("quadrature did not converge on [{lower}, {upper}]: {detail}")]
    Quadrature {
        lower: f64,
        upper: f64,
        detail: String,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}
