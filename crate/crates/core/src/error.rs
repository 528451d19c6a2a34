use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid circuit: {0}")]
    Circuit(String),
    #[error("parameter-shift rule does not apply to slot {0} (arbitrary-unitary generator)")]
    UnsupportedShiftRule(usize),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("label error: {0}")]
    Label(String),
    #[error("state error: {0}")]
    State(String),
    #[error("stratification error: {0}")]
    Stratification(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("degenerate test: {0}")]
    DegenerateTest(String),
    #[error("training diverged at epoch {epoch}: {reason}")]
    Divergence { epoch: usize, reason: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
