use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Eval(#[from] bred_core::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid sweep spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
