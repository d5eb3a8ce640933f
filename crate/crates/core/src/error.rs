use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("body is not strictly convex (minimum principal radius {r_min:.3e})")]
    NotStrictlyConvex { r_min: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature order insufficient: order doubling changed the value by {diff:.3e}")]
    QuadratureOrder { diff: f64 },
    #[error("oscillatory integral under-resolved: order doubling changed the value by {diff:.3e}")]
    UnderResolved { diff: f64 },
    #[error("Newton iteration diverged for lattice index {xi:?}")]
    NewtonDiverged { xi: Vec<i64> },
    #[error("non-unique maximizer for lattice index {xi:?} (Hessian eigenvalue {eig:.3e})")]
    NonUniqueMaximizer { xi: Vec<i64>, eig: f64 },
    #[error("orientation not supported: {0}")]
    UnsupportedOrientation(String),
    #[error("s = {s} is within 1e-8 of the pole at {pole}")]
    PoleHit { s: String, pole: usize },
    #[error("tail bound {bound:.3e} dominates the value {value:.3e}")]
    TailDominates { bound: f64, value: f64 },
    #[error("singularity fit at y = {location} is ambiguous between alpha = {alpha1} and {alpha2}")]
    FitAmbiguous { location: f64, alpha1: f64, alpha2: f64 },
    #[error("spectrum truncation too small: test-function tail {tail:.3e} at T = {t_max}")]
    TruncationTooSmall { tail: f64, t_max: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
