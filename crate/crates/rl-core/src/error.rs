use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("environment error: {0}")]
    Env(#[from] env_core::EnvError),
    #[error("tensor error: {0}")]
    Tensor(#[from] tensor_core::TensorError),
    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),
}
