use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{method} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("monotonicity violated in {method} at sweep {sweep}")]
    NonMonotone { method: &'static str, sweep: usize },

    #[error("truncation {given} leaves geometric tail mass {tail:e}; need at least {required}")]
    TruncationTooShort { given: usize, required: usize, tail: f64 },

    #[error("sampling distribution has zero mass at state {state}, action {action}, goal {goal}")]
    ZeroSamplingMass { state: usize, action: usize, goal: usize },

    #[error("singular linear system for goal {goal}")]
    Singular { goal: usize },

    #[error("trajectory of length {length} too short for replay after {attempts} redraws")]
    TrajectoryTooShort { length: usize, attempts: usize },

    #[error("non-finite value in {table} after {steps} updates")]
    NonFinite { table: &'static str, steps: u64 },

    #[error("replay buffer is empty")]
    EmptyBuffer,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, actual })
    }
}
