use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation requires a Heisenberg group, got {0}")]
    UnsupportedGroup(String),

    #[error("point {point:?} lies outside the smooth domain of `{field}`")]
    Domain { field: String, point: Vec<f64> },

    #[error("singular point {0:?}: horizontal part vanishes")]
    SingularPoint(Vec<f64>),

    #[error("ill-posed integrand: {rejected} of {total} samples rejected")]
    IllPosedIntegrand { rejected: u64, total: u64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("sampler failed to produce an admissible sample after {0} attempts")]
    SamplerExhausted(usize),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is neither `Clone` nor `PartialEq`; keep the message only.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(IoError(e.to_string()))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
