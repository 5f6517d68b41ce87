use thiserror::Error;

/// Errors produced across the toolkit. Each variant has a stable textual
/// code (see [`Error::code`]) which the CLI prints on stderr.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("SyntaxError: {0}")]
    Syntax(String),
    #[error("UnknownReference: {0}")]
    UnknownReference(String),
    #[error("CycleError: {0}")]
    Cycle(String),
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("DuplicateName: {0}")]
    DuplicateName(String),
    #[error("LengthMismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("TokenOutOfRange: token {token} >= vocabulary size {vocab_size}")]
    TokenOutOfRange { token: u64, vocab_size: usize },
    #[error("AttributeMismatch: {0}")]
    AttributeMismatch(String),
    #[error("EmptySample: sample {0} retains no message")]
    EmptySample(String),
    #[error("UnknownSample: {0}")]
    UnknownSample(String),
    #[error("EmptyInput: no messages given")]
    EmptyInput,
    #[error("EmptyCorpus: corpus has no samples")]
    EmptyCorpus,
    #[error("ZeroVariance: {0}")]
    ZeroVariance(String),
    #[error("CapacityError: {0}")]
    Capacity(String),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("NotFound: {0}")]
    NotFound(String),
    #[error("IoError: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax(_) => "SyntaxError",
            Error::UnknownReference(_) => "UnknownReference",
            Error::Cycle(_) => "CycleError",
            Error::Domain(_) => "DomainError",
            Error::DuplicateName(_) => "DuplicateName",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::TokenOutOfRange { .. } => "TokenOutOfRange",
            Error::AttributeMismatch(_) => "AttributeMismatch",
            Error::EmptySample(_) => "EmptySample",
            Error::UnknownSample(_) => "UnknownSample",
            Error::EmptyInput => "EmptyInput",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::ZeroVariance(_) => "ZeroVariance",
            Error::Capacity(_) => "CapacityError",
            Error::Config(_) => "ConfigError",
            Error::NotFound(_) => "NotFound",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        match err.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(err.to_string()),
            _ => Error::Io(err.to_string()),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
