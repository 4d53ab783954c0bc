use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible.
    Shape { op: &'static str, detail: String },
    /// An operation produced NaN or infinity.
    NonFinite { op: &'static str },
    /// `backward` was called on a tensor with more than one element.
    NotScalar { numel: usize },
    /// A configuration value violates its invariant.
    Config(String),
    /// Input data violates a precondition.
    InvalidInput(String),
    /// A named parameter is missing or has the wrong shape.
    Parameter(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    /// Short stable category name, used in machine-readable diagnostics.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::NonFinite { .. } => "numeric",
            Error::NotScalar { .. } => "shape",
            Error::Config(_) => "config",
            Error::InvalidInput(_) => "data",
            Error::Parameter(_) => "checkpoint",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, detail } => write!(f, "dimension error in {op}: {detail}"),
            Error::NonFinite { op } => write!(f, "non-finite value produced by {op}"),
            Error::NotScalar { numel } => {
                write!(f, "backward requires a scalar loss, got {numel} elements")
            }
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
