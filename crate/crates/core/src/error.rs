use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A backward pass was requested without a matching forward pass.
    #[error("layer state: {0}")]
    State(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// A loss or gradient became NaN or infinite.
    #[error("training diverged at epoch {epoch:?}: {what}")]
    Divergence { epoch: Option<usize>, what: String },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}

macro_rules! shape_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Shape(alloc::format!($($arg)*))
    };
}

pub(crate) use invalid;
pub(crate) use shape_err;
