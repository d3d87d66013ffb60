use thiserror::Error;

pub type Result<T> = std::result::Result<T, JdeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JdeError {
    /// A documented precondition of an operation was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Input data is malformed (non-finite samples, unnormalized density, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Conditioning on an existence state that has zero posterior probability.
    #[error("cannot condition on v={v}: posterior probability is zero")]
    DegenerateConditioning { v: u8 },
    #[error("invalid configuration: {0}")]
    Config(String),
}
