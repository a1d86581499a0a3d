use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Inconsistent or invalid parameters (dimensions, α ≤ β, unknown algorithm, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was called outside its domain (empty measure, too few points, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Non-finite input handed to a numeric routine.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A particle left the finite reals during time stepping.
    #[error("divergence at step {step} (seed {seed}, ensemble {ensemble}, particle {particle})")]
    Divergence {
        seed: u64,
        step: usize,
        ensemble: usize,
        particle: usize,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
