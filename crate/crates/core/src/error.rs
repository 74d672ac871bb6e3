use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("singular input: {0}")]
    SingularInput(String),
    #[error("divergent measure: {0}")]
    DivergentMeasure(String),
    #[error("non-normalizable angular measure: {0}")]
    NonNormalizable(String),
    #[error("majorant violation at step {step}: pair ({i}, {j}) has rate {rate} > cap {cap}")]
    MajorantViolation {
        step: u64,
        i: usize,
        j: usize,
        rate: f64,
        cap: f64,
    },
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::SingularInput(_) => "singular-input",
            Error::DivergentMeasure(_) => "divergent-measure",
            Error::NonNormalizable(_) => "non-normalizable",
            Error::MajorantViolation { .. } => "majorant-violation",
            Error::Capacity(_) => "capacity-error",
            Error::Config(_) => "config-error",
            Error::Io(_) => "io-error",
            Error::Parse(_) => "parse-error",
        }
    }
}
