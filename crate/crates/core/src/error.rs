use thiserror::Error;

/// Errors raised by the analytical model and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("numerical instability evaluating {what} (n = {n}, delta = {delta}): {detail}")]
    NumericalInstability {
        what: &'static str,
        n: usize,
        delta: f64,
        detail: String,
    },

    #[error("probability {value} outside [0, 1] in {context}")]
    ProbabilityOutOfRange { value: f64, context: &'static str },

    #[error("outcome probabilities do not partition unity: deficit {deficit:e}")]
    ModelInconsistency { deficit: f64 },

    #[error("index {index} out of range for {what} (valid {min}..={max})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        min: usize,
        max: usize,
    },

    #[error("instance too large for exhaustive enumeration: {0}")]
    InstanceTooLarge(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
