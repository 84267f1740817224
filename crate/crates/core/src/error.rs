use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Two coordinates are equal, so the interaction term is singular.
    #[error("coordinates {i} and {j} coincide")]
    CoincidentCoordinates { i: usize, j: usize },

    #[error("coordinate {i} is zero")]
    ZeroCoordinate { i: usize },

    #[error("point outside the domain: {0}")]
    DomainError(String),

    #[error("k = {k} is outside 1..={n}")]
    BadK { k: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("no invariant law without mean reversion (b = {b})")]
    NoInvariantLaw { b: f64 },

    #[error("stationary density needs gamma > 0 and kappa > 0 (gamma = {gamma}, kappa = {kappa})")]
    NotEvaluable { gamma: f64, kappa: f64 },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("non-finite state at t = {t}")]
    NumericalFailure { t: f64 },

    #[error("random source failure: {0}")]
    RngFailure(String),
}
