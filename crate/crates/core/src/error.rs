use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("symmetric eigensolver failed to converge after {attempts} attempts")]
    EigenNoConvergence { attempts: usize },

    #[error("quadrature did not reach tolerance (estimated error {abs_error:e})")]
    Quadrature { abs_error: f64 },

    #[error("near-singular critical point: |f| = {0:e}")]
    NearSingular(f64),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
