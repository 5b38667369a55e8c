use thiserror::Error;

/// Errors raised by the geometric, flow and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid space descriptor: {0}")]
    InvalidSpace(String),
    #[error("geodesic is not unique (distance {distance} reaches the antipodal limit {limit})")]
    NonUniqueGeodesic { distance: f64, limit: f64 },
    #[error("comparison triangle undefined: perimeter {perimeter} is not below {limit}")]
    ComparisonUndefined { perimeter: f64, limit: f64 },
    #[error("angle undefined: {0}")]
    UndefinedAngle(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("directions have different base points")]
    MismatchedBase,
    #[error("negative scale factor {0}; tangent cones have no negation")]
    NegativeScale(f64),
    #[error("point outside the effective domain (energy is +inf)")]
    OutsideDomain,
    #[error("prox step failed: {0}")]
    ProxFailure(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid config at `{path}`: {message}")]
    InvalidConfig { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
