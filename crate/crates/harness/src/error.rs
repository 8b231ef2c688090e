use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] env_core::EnvError),
    #[error(transparent)]
    Rl(#[from] rl_core::RlError),
    #[error(transparent)]
    Prpd(#[from] prpd_core::PrpdError),
    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(String),
}
