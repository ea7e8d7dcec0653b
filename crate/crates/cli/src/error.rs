use dcosp::config::ConfigError;
use dcosp::scenario::ScenarioError;
use dcosp::simkernel::RunError;
use std::path::PathBuf;
use thiserror::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;
pub const EXIT_ORACLE_BUDGET: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("config: {0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(ScenarioError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{scenario} / {solver}: {source}")]
    Run { scenario: String, solver: String, source: RunError },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("oracle budget exhausted on {0} scenario(s); gaps are against lower bounds")]
    OracleBudget(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Run { source, .. } if source.is_invariant_violation() => EXIT_INVARIANT,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::OracleBudget(_) => EXIT_ORACLE_BUDGET,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Config(c) => CliError::Config(c),
            other => CliError::Scenario(other),
        }
    }
}
