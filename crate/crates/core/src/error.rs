use thiserror::Error;

/// Crate-wide error type. Operations return `Result<T>` with this error;
/// `BudgetExceeded` is kept distinct so callers can map it to its own exit code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("{context}: value {value} out of range 0..{bound}")]
    OutOfRange {
        context: String,
        value: usize,
        bound: usize,
    },

    #[error("malformed partition: {0}")]
    MalformedPartition(String),

    #[error("binding mismatch: {0}")]
    BindingMismatch(String),

    #[error("unknown relation symbol {0:?}")]
    UnknownSymbol(String),

    #[error("no pp-definition for symbol {0:?}")]
    MissingDefinition(String),

    #[error("arity mismatch: {0}")]
    ArityMismatch(String),

    #[error("width violation: {0}")]
    WidthViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("engines disagree: {0}")]
    CrossCheck(String),

    #[error("search budget exceeded")]
    BudgetExceeded,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn out_of_range(context: impl Into<String>, value: usize, bound: usize) -> Self {
        Error::OutOfRange {
            context: context.into(),
            value,
            bound,
        }
    }

    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
