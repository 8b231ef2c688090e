use harness::HarnessError;

/// Exit-code contract: 0 success, 1 runtime fault, 2 usage or
/// configuration error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<env_core::EnvError> for CliError {
    fn from(e: env_core::EnvError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<rl_core::RlError> for CliError {
    fn from(e: rl_core::RlError) -> Self {
        match e {
            rl_core::RlError::Config(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
