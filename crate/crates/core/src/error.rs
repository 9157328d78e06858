use thiserror::Error;

/// Errors raised by the library.
///
/// `Guard` marks a deliberate refusal on size grounds (exponential enumeration,
/// oversized LP); callers map it to a distinct exit status.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("element {value} is outside GF({order})")]
    OutOfField { value: u32, order: u32 },

    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("cannot encode from an empty node memory")]
    EmptyMemory,

    #[error("refused: {0}")]
    Guard(String),

    #[error("flow contains a cycle through node {0}")]
    Cyclic(usize),

    #[error("no fit: {0}")]
    NoFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
