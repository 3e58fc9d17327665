use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid sample at index {index}: {reason}")]
    InvalidSample { index: usize, reason: &'static str },
    #[error("brute-force oracle supports at most {max} samples, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("block index {k} out of range for a fit with {complexity} blocks")]
    OutOfRange { k: usize, complexity: usize },
    #[error("merging block {k} with its right neighbour would break strict monotonicity")]
    WouldBreakMonotonicity { k: usize },
    #[error("fit covers {fit} samples but dataset has {data}")]
    FitDataMismatch { fit: usize, data: usize },
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("non-positive value at index {index} where the loss requires positivity")]
    NonPositiveValue { index: usize },
    #[error("invalid simulation config: {field}: {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
