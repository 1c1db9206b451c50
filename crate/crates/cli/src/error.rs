use std::fmt;

/// Failure of a subcommand, mapped to a process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, config keys or inconsistent inputs.
    Usage(String),
    /// Unreadable or malformed input, unwritable output.
    Io(String),
    Divergence(String),
    /// A violated internal invariant, e.g. a deterministic solver ascending.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{path}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "input/output error: {m}"),
            CliError::Divergence(m) => write!(f, "solver diverged: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mmsvm::Error> for CliError {
    fn from(e: mmsvm::Error) -> Self {
        use mmsvm::Error as E;
        let msg = e.to_string();
        match e {
            E::Io { .. } | E::Parse { .. } | E::Empty(_) => CliError::Io(msg),
            E::InvalidConfig(_) | E::InvalidSplit(_) | E::DimensionMismatch { .. } => {
                CliError::Usage(msg)
            }
            E::Divergence { .. } => CliError::Divergence(msg),
            _ => CliError::Internal(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
