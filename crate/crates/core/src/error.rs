use thiserror::Error;

/// Errors raised by the barrier, dynamics and QP layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("QP infeasible: {0}")]
    Infeasible(String),
    #[error("sequencing error: {0}")]
    Sequencing(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite {what}: {values:?}")))
    }
}
