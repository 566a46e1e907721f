use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("sample count must be at least 1")]
    ZeroSamples,

    #[error("Lambert W_-1 argument {0} lies outside [-1/e, 0)")]
    LambertDomain(f64),

    #[error("sample complexity exceeds the exactly representable integer range")]
    ComplexityOverflow,

    #[error("unknown arm {0}")]
    UnknownArm(usize),

    #[error("arm {0} cannot be expanded")]
    NotExpandable(usize),

    #[error("grid has {cells} cells, more than the configured ceiling of {ceiling}")]
    TooManyCells { cells: usize, ceiling: usize },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Qualify the offending field with the path of its enclosing section.
    pub fn prefixed(self, prefix: &str) -> Self {
        match self {
            Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                field: format!("{prefix}.{field}"),
                reason,
            },
            other => other,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
