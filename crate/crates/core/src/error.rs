use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient must be strictly positive, found {value} at node {node}")]
    NonPositiveCoefficient { node: usize, value: f64 },

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("solver did not reach tolerance: relative residual {residual:e}")]
    NonConvergence { residual: f64 },

    #[error("deterministic solve failed at {stage} point {index}: {source}")]
    SolveFailed {
        stage: &'static str,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("requested {requested} modes but only {available} are numerically nonzero")]
    RankDeficient { requested: usize, available: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("zero reference norm in relative error")]
    ZeroDenominator,

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("malformed input {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem(_)
                | Error::NonConvergence { .. }
                | Error::SolveFailed { .. }
                | Error::RankDeficient { .. }
                | Error::Eigen(_)
                | Error::ZeroDenominator
                | Error::NonPositiveCoefficient { .. }
        )
    }
}
