use thiserror::Error;

/// Failure modes shared by the model, rate and optimizer layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} is out of its domain: {detail}")]
    Domain { name: &'static str, detail: String },

    #[error("infeasible policy: training consumes {training} of the power budget {budget}")]
    Infeasible { training: f64, budget: f64 },

    #[error("unsupported range: {0}")]
    UnsupportedRange(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        name,
        detail: detail.into(),
    }
}

/// Rejects NaN and values that are not strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(domain(name, format!("must be finite and > 0, got {value}")))
    }
}

/// Requires `value` to lie in the open unit interval.
pub(crate) fn require_unit_open(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(domain(name, format!("must lie in (0, 1), got {value}")))
    }
}
