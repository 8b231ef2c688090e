use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrpdError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("resolution schedule corrupted: {0}")]
    ScheduleCorruption(String),
    #[error(transparent)]
    Rl(#[from] rl_core::RlError),
    #[error("tensor error: {0}")]
    Tensor(#[from] tensor_core::TensorError),
}
