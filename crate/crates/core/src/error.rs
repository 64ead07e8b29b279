//! Crate-wide error type.
//!
//! Numeric payloads are reported as `f64` regardless of the scalar the
//! computation ran at; they are diagnostics, not data.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("root bracketing failed: no sign change of {context} in [{lo}, {hi}]")]
    Bracketing { context: &'static str, lo: f64, hi: f64 },

    #[error("root refinement did not converge for {context} after {iterations} iterations")]
    RootConvergence { context: &'static str, iterations: usize },

    #[error("adaptive quadrature failed to reach tolerance {tol:e} (best error {achieved:e})")]
    Quadrature { tol: f64, achieved: f64 },

    #[error("ODE integration exceeded {max_steps} steps (t = {t})")]
    OdeSteps { max_steps: usize, t: f64 },

    #[error("ODE step size underflow at t = {t}")]
    OdeStepUnderflow { t: f64 },

    #[error("parse error at line {line}, column {col}: {message}")]
    Parse { line: usize, col: usize, message: String },

    #[error("metric definition error: {0}")]
    MetricDefinition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point:?} outside chart bounds of coordinate x{coordinate} = [{lo}, {hi}]")]
    OutOfBounds { point: Vec<f64>, coordinate: usize, lo: f64, hi: f64 },

    #[error("metric not positive definite at evaluation point (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("matrix is singular or ill-conditioned (pivot {pivot:e} at row {row})")]
    SingularMatrix { pivot: f64, row: usize },

    #[error("least-squares design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("{what} must be symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { what: &'static str, asymmetry: f64 },

    #[error("field has a mean component of norm {norm:e}, above tolerance {tol:e}")]
    NotMeanZero { norm: f64, tol: f64 },

    #[error("right-hand side has degree-{degree} content of relative norm {norm:e} in the operator kernel/cokernel")]
    KernelContent { degree: usize, norm: f64 },

    #[error("degree-0 boundary mode is resonant at the ball eigenvalue: no regular radial solution attains the requested boundary value")]
    ResonantMode,

    #[error("eigenvalue iteration did not converge after {iterations} iterations (residual {residual:e})")]
    EigenConvergence { iterations: usize, residual: f64 },

    #[error("boundary radius is not strictly positive (min {min_radius:e}); domain must be star-shaped")]
    NotStarShaped { min_radius: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
