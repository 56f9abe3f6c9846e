use crate::grid::Side;

/// Errors raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("sample count {actual} does not match grid size {expected}")]
    SampleCount { expected: usize, actual: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("integrability exponent {0} is outside [1, inf]")]
    InvalidExponent(f64),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("expected a {expected:?}-side function, got {actual:?}")]
    WrongSide { expected: Side, actual: Side },
    #[error("level {requested} exceeds the admissible maximum ({max}) for this grid")]
    LevelTooHigh { requested: i64, max: String },
    #[error("spectral tail {tail:e} exceeds tolerance {tolerance:e}")]
    SpectralTail { tail: f64, tolerance: f64 },
    #[error("invalid space spec `{spec}`: {reason}")]
    SpaceSpec { spec: String, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("support escapes the domain: {0}")]
    SupportEscapes(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine readable tag for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::SampleCount { .. } => "sample_count",
            Error::NonFinite(_) => "non_finite",
            Error::InvalidExponent(_) => "invalid_exponent",
            Error::GridMismatch => "grid_mismatch",
            Error::WrongSide { .. } => "wrong_side",
            Error::LevelTooHigh { .. } => "level_too_high",
            Error::SpectralTail { .. } => "spectral_tail",
            Error::SpaceSpec { .. } => "space_spec",
            Error::Unsupported(_) => "unsupported",
            Error::SupportEscapes(_) => "support_escapes",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
