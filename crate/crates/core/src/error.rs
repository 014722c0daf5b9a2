use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid ciphertext: {0}")]
    InvalidCiphertext(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown user {0}")]
    UnknownUser(usize),

    #[error("user {0} already enrolled")]
    DuplicateUser(usize),

    #[error("invalid attacker set: {0}")]
    InvalidAttacker(String),

    #[error("role {0} is not under attacker control")]
    NotControlled(String),

    #[error("rejection cap of {0} messages exceeded")]
    RejectionCap(u64),

    #[error("{0}")]
    Attack(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
