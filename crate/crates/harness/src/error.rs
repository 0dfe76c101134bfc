use rsr_core::RsrError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] RsrError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Output(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

impl HarnessError {
    /// Process exit status: 2 configuration, 3 regime violation, 4 estimator
    /// failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Core(e) => match e {
                RsrError::InvalidConfig(_)
                | RsrError::InvalidDataset(_)
                | RsrError::DimensionError(_)
                | RsrError::InfeasibleAngles(_)
                | RsrError::NeedsGroundTruth
                | RsrError::Format(_) => 2,
                RsrError::RegimeViolation { .. } => 3,
                RsrError::Io(_) => 1,
                _ => 4,
            },
            HarnessError::Io(_) | HarnessError::Output(_) => 1,
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Output(e.to_string())
    }
}
