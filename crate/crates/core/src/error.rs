use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed a value outside an operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The protocol stack broke one of its own invariants (timer misuse,
    /// illegal state transition, overlapping transmissions). The run is
    /// not trustworthy past this point.
    #[error("protocol fault: {0}")]
    Fault(String),

    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn fault(msg: impl Into<String>) -> Self {
        Error::Fault(msg.into())
    }

    pub fn is_fault(&self) -> bool {
        matches!(self, Error::Fault(_))
    }
}
