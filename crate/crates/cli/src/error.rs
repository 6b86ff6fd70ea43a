use std::fmt;

/// A failed run, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 2).
    Usage(String),
    /// Missing, unreadable or malformed input files, or failed writes (exit 3).
    Io(String),
    /// Inputs that are well-formed but violate an operation's precondition (exit 4).
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Domain(_) => 4,
        }
    }

    /// Reclassifies a library error caused by flag values as a usage error.
    pub fn flags(e: sweepvol::Error) -> Self {
        match e {
            sweepvol::Error::Domain(m) => CliError::Usage(m),
            other => other.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "input/output error: {m}"),
            CliError::Domain(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sweepvol::Error> for CliError {
    fn from(e: sweepvol::Error) -> Self {
        match e {
            sweepvol::Error::Domain(_) => CliError::Domain(e.to_string()),
            sweepvol::Error::Parse(_) | sweepvol::Error::Format(_) | sweepvol::Error::Io(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
