use std::fmt;

use zem_core::sim::SimError;
use zem_core::ModelError;

/// Every failure maps to one line `error[<kind>]: <message>` and an exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Configuration file or scenario validation failed.
    Config(String),
    /// A command-line value or input file was outside its domain.
    Input(String),
    /// A file could not be read or written.
    Io(String),
    /// The command line itself did not parse.
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Input(_) => "input",
            CliError::Io(_) => "io",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            _ => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Input(m) | CliError::Io(m) | CliError::Usage(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat: Vec<&str> = self.message().lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        write!(f, "error[{}]: {}", self.kind(), flat.join(" | "))
    }
}

impl std::error::Error for CliError {}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InputDomain { .. } => CliError::Input(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Validation(v) => CliError::Config(v.to_string()),
            SimError::Model(m) => m.into(),
        }
    }
}
