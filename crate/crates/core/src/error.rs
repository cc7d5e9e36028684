use thiserror::Error;

pub type Result<T, E = EarlError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EarlError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trial log is empty")]
    EmptyLog,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate reservoir: {0}")]
    DegenerateReservoir(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("training diverged at epoch {epoch}")]
    TrainingFailure { epoch: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("surrogate failure: {0}")]
    SurrogateFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl EarlError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        EarlError::InvalidArgument(msg.into())
    }
}
