//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid lambda: {0}")]
    InvalidLambda(String),
    #[error("point outside the truncation box: {0}")]
    OutOfDomain(String),
    #[error("quadratic form undefined: {0}")]
    UndefinedForm(String),
    #[error("not found in the computed spectrum: {0}")]
    NotFound(String),
    #[error("dimension too low: {0}")]
    DimensionTooLow(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("factorization failure: {0}")]
    FactorizationFailure(String),
    #[error("insufficient range: {0}")]
    InsufficientRange(String),
    #[error("prerequisite failed: {0}")]
    PrerequisiteFailed(String),
    #[error("quadrature overflow: {0}")]
    QuadratureOverflow(String),
    #[error("geometry not found: {0}")]
    GeometryNotFound(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("degenerate to zero: {0}")]
    DegenerateToZero(String),
    #[error("inner maximization diverged: {0}")]
    InnerMaxDiverged(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
