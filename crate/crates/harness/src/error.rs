use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("file: {0}")]
    File(String),
    #[error("format: {0}")]
    Format(String),
    #[error("{0}")]
    Divergence(String),
    #[error(transparent)]
    Core(qcnn_core::Error),
}

impl HarnessError {
    /// Process exit status; 2 matches clap's own usage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::File(_) => 3,
            HarnessError::Format(_) => 4,
            HarnessError::Divergence(_) => 5,
            HarnessError::Core(_) => 1,
        }
    }
}

impl From<qcnn_core::Error> for HarnessError {
    fn from(e: qcnn_core::Error) -> Self {
        use qcnn_core::Error as E;
        match e {
            E::Parameter(m) => HarnessError::Usage(m),
            E::Io(m) => HarnessError::File(m),
            E::Format(m) | E::Label(m) => HarnessError::Format(m),
            e @ E::Divergence { .. } => HarnessError::Divergence(e.to_string()),
            other => HarnessError::Core(other),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::File(e.to_string())
    }
}
