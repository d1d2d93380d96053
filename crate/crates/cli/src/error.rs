use std::fmt;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs: exit code 2.
    Usage(String),
    /// A checked invariant did not hold, or the computation failed: exit code 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gradgp::Error> for CliError {
    fn from(e: gradgp::Error) -> Self {
        use gradgp::Error::*;
        match e {
            InvalidDimension(_) | InvalidInput(_) | Parse(_) => CliError::Usage(e.to_string()),
            NotImplemented(_) | Factorization { .. } | NoFeasibleStart => CliError::Failed(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn io_error(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}
