use thiserror::Error;

/// Errors raised by the library. The CLI exits with code 1 for
/// [`Error::Usage`], [`Error::Io`], [`Error::Parse`] and
/// [`Error::InvalidConfig`], and with code 2 for everything else.
#[derive(Debug, Error)]
pub enum Error {
    #[error("merging function needs at least one argument")]
    EmptyInput,

    #[error("invalid value: {0}")]
    Domain(String),

    #[error("invalid merge spec: {0}")]
    InvalidSpec(String),

    #[error("power-sum formula only covers orders 1..=4, got {0}")]
    UnsupportedOrder(usize),

    #[error("intermediate overflow while evaluating {0}")]
    Overflow(&'static str),

    #[error("catastrophic cancellation: result {0:e} is negative")]
    Cancellation(f64),

    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{what} of size {size} exceeds the enumeration limit {max}")]
    TooLarge {
        what: &'static str,
        size: usize,
        max: usize,
    },

    #[error("significance level must be positive, got {0}")]
    InvalidAlpha(f64),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Io(_) | Error::Parse(_) | Error::InvalidConfig(_) => 1,
            _ => 2,
        }
    }
}
