use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point set must be nonempty")]
    EmptySet,

    #[error("non-finite coordinate encountered")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("function system is not contractive (contraction factor {factor})")]
    NotContractive { factor: f64 },

    #[error("data of length {len} is shorter than the mask stencil (support size {support})")]
    StencilTooShort { len: usize, support: usize },

    #[error("slice size n = {n} too small for this mask (need n >= {min})")]
    SliceSizeTooSmall { n: usize, min: usize },

    #[error("matrix is singular or numerically degenerate (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("control points are degenerate: lift matrix condition estimate {condition:e}")]
    DegenerateControlPoints { condition: f64 },

    #[error("subdivision slices do not reproduce constants")]
    ConstantsNotReproduced,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("point set grew to {points} points, above the limit of {limit}")]
    SetTooLarge { points: usize, limit: usize },

    #[error("unknown catalog entry `{0}`")]
    UnknownScheme(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
