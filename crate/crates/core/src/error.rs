use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("ambient mismatch: {0}")]
    AmbientMismatch(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("{what} exceeds cap {cap}")]
    CapExceeded { what: String, cap: u64 },
    #[error("search budget of {budget} states exceeded after {visited}")]
    BudgetExceeded { budget: u64, visited: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0} trials exhausted without success")]
    TrialsExhausted(u32),
    #[error("unknown claim id {0:?}")]
    UnknownClaim(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParam(msg.into()))
}
