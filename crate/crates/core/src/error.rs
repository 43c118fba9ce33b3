use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension must be ≥ 1 (got {0})")]
    InvalidDimension(usize),

    #[error("q and p must have the same length (got {q} and {p})")]
    ShapeMismatch { q: usize, p: usize },

    #[error("arity mismatch: expected {expected}, got {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("Casimir order m={m} must satisfy 2 ≤ m ≤ n={n}")]
    InvalidCasimirOrder { m: usize, n: usize },

    #[error("non-finite value {what} at point {point:?}")]
    NonFinite { what: String, point: Vec<f64> },

    #[error("profile function must satisfy f(0) = 1 (got f(0) = {0})")]
    InvalidProfile(f64),

    #[error("Hamiltonian is not quadratic and diagonal in momenta: {what} residual {residual:e}")]
    NotQuadratic { what: String, residual: f64 },

    #[error("metric is degenerate at {point:?} (component {component})")]
    DegenerateMetric { component: usize, point: Vec<f64> },

    #[error("metric signature changes at {point:?} (component {component})")]
    SignatureChange { component: usize, point: Vec<f64> },

    #[error("point outside the chart: relation {relation} violated ({detail})")]
    OutOfChart { relation: usize, detail: String },

    #[error("chart boundary singularity: {0}")]
    ChartSingularity(String),

    #[error("singular Jacobian (chart boundary), |det| = {0:e}")]
    SingularJacobian(f64),

    #[error("implicit step failed to converge at t = {time} (residual {residual:e})")]
    NonConvergence { time: f64, residual: f64 },

    #[error("trajectory left the domain at t = {time}: {detail}")]
    DomainExit { time: f64, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
