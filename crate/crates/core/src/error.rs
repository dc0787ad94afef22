use thiserror::Error;

pub type Result<T> = std::result::Result<T, IcdError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IcdError {
    #[error("image has zero width or height")]
    EmptyInput,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: String, actual: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),
}

impl IcdError {
    pub(crate) fn dims(expected: (usize, usize), actual: (usize, usize)) -> Self {
        IcdError::Dimension {
            expected: format!("{}x{}", expected.0, expected.1),
            actual: format!("{}x{}", actual.0, actual.1),
        }
    }

    pub(crate) fn len(expected: usize, actual: usize) -> Self {
        IcdError::Dimension {
            expected: format!("{expected} values"),
            actual: format!("{actual} values"),
        }
    }
}
