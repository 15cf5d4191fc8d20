//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures raised by geometric constructions and numerical engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model mismatch: {0} vs {1}")]
    ModelMismatch(String, String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (supported range is 2..=8)")]
    UnsupportedDimension(usize),

    #[error("point leaves the half-space chart (z = {0:e})")]
    OutsideChart(f64),

    #[error("tangent vectors have different base points")]
    BaseMismatch,

    #[error("tangent vector is not unit length (norm = {0})")]
    NonUnitTangent(f64),

    #[error("boundary points coincide")]
    CoincidentBoundaryPoints,

    #[error("points coincide")]
    CoincidentPoints,

    #[error("boundary point does not belong to this model: {0}")]
    InvalidIdeal(String),

    #[error("model does not satisfy the visibility condition: {0}")]
    NotVisibility(String),

    #[error("empty intersection locus: s = {0} is below the minimum of b1 + b2")]
    EmptyLocus(f64),

    #[error("degenerate locus at s = 0: weighted integrals are only defined for s > 0")]
    DegenerateLocus,

    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("flow is singular at or through the set where the gradients cancel (1 + beta = {0:e})")]
    SingularFlow(f64),

    #[error("ODE step size underflow at time {time} (step {step:e})")]
    StepUnderflow { time: f64, step: f64 },

    #[error("finite-difference stencil leaves the chart")]
    StencilOutsideChart,

    #[error("test function support escapes the integration region")]
    SupportEscapesRegion,

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
