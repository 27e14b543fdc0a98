use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied parameter is outside the accepted domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A floating point computation produced a value that cannot be used
    /// (non-positive argument to a logarithm, empty pseudo-inverse, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A contraction or simulation would exceed the configured memory ceiling.
    #[error("job too large: needs {needed} entries, ceiling is {ceiling}")]
    TooLarge { needed: u128, ceiling: u128 },

    /// The fidelity excess `F - d^-N` is not positive.
    #[error("fidelity {fidelity:e} is at or below the random-state floor {floor:e}")]
    BelowNoiseFloor { fidelity: f64, floor: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
