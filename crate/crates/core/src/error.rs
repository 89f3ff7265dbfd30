use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("jet of order {got} is too short; operation needs order {needed}")]
    Arity { needed: u8, got: u8 },
    #[error("point outside the operator's domain: {0}")]
    Domain(&'static str),
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: &'static str, reason: String },
    #[error("evolution diverged (non-finite value) at step {step}")]
    Divergence { step: usize },
    #[error("signal reached the outer boundary at step {step}")]
    BoundaryReached { step: usize },
    #[error("grid or time-level mismatch: {0}")]
    Mismatch(&'static str),
    #[error("derivative tier {0} is not supported (max 2, or 3 for Klainerman-Sobolev norms)")]
    UnsupportedTier(usize),
    #[error("interpolation failed: {0}")]
    Interpolation(&'static str),
    #[error("not enough data: {0}")]
    InsufficientData(&'static str),
    #[error("cone support violated: {0}")]
    ConeSupport(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn config_err(key: &'static str, reason: impl Into<String>) -> Error {
    Error::Config {
        key,
        reason: reason.into(),
    }
}
