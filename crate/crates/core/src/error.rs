use thiserror::Error;

/// Errors raised by the model operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// An argument lies outside the operation's domain.
    #[error("{quantity} out of domain: {detail}")]
    InputDomain { quantity: &'static str, detail: String },
    /// A Peukert calibration would produce a physically invalid exponent.
    #[error("calibration rejected: {0}")]
    Calibration(String),
    /// A component configuration violates a rating or topology rule.
    #[error("configuration error: {0}")]
    Configuration(String),
}

impl ModelError {
    pub(crate) fn domain(quantity: &'static str, detail: impl Into<String>) -> Self {
        ModelError::InputDomain { quantity, detail: detail.into() }
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
