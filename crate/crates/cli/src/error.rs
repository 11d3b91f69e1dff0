//! Command failures mapped to stable process exit codes.

use std::fmt;

/// Exit code of a successful command.
pub const EXIT_OK: i32 = 0;

/// Why a command failed; [`CliError::exit_code`] gives the process code.
#[derive(Debug)]
pub enum CliError {
    /// Reading or writing an output failed: exit code 1.
    Io(String),
    /// Unusable configuration or arguments: exit code 2.
    Config(String),
    /// The solver state left the representable range: exit code 3.
    NonFinite(String),
    /// A verification tolerance or expected outcome was missed: exit code 4.
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::NonFinite(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(msg) => write!(f, "io: {msg}"),
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::NonFinite(msg) => write!(f, "solver: {msg}"),
            CliError::Tolerance(msg) => write!(f, "verification: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<kolmo_core::Error> for CliError {
    fn from(err: kolmo_core::Error) -> Self {
        match err {
            kolmo_core::Error::NonFinite { .. } => CliError::NonFinite(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(CliError::Io(String::new()).exit_code(), 1);
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::NonFinite(String::new()).exit_code(), 3);
        assert_eq!(CliError::Tolerance(String::new()).exit_code(), 4);
    }

    #[test]
    fn core_errors_map_by_kind() {
        let blown = kolmo_core::Error::NonFinite { t: 2.0 };
        assert_eq!(CliError::from(blown).exit_code(), 3);
        let bad = kolmo_core::Error::InvalidConfig("nx must be even".into());
        assert_eq!(CliError::from(bad).exit_code(), 2);
    }
}
