use std::fmt;

use lienorm_core::Error as CoreError;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or unusable input file (exit 2).
    Config(String),
    /// Numerical failure: small divisor, Newton failure, integrator breakdown (exit 3).
    Numeric(CoreError),
    /// A self-check exceeded its tolerance (exit 4).
    Tolerance(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(CoreError::Domain(_) | CoreError::Argument(_)) => 2,
            CliError::Numeric(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "configuration error: {s}"),
            CliError::Numeric(e) => write!(f, "{e}"),
            CliError::Tolerance(s) => write!(f, "self-check failed: {s}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Numeric(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
