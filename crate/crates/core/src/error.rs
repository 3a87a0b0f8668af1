use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A result would overflow double precision.
    #[error("range error: {0}")]
    Range(String),

    /// Successive quadrature refinements disagree by more than the tolerance.
    #[error("quadrature did not converge: {what} (coarse {coarse:e}, fine {fine:e}, tolerance {tolerance:e})")]
    NonConvergence {
        what: String,
        coarse: f64,
        fine: f64,
        tolerance: f64,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be positive, got {value}"
        )))
    }
}
