use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("simulation fault: {0}")]
    SimulationFault(String),
    #[error("replay diverged at step {step}: {detail}")]
    ReplayDiverged { step: usize, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
