//! Error types shared across the grid generation pipeline.

use thiserror::Error;

/// Errors produced by field evaluation, integration, solving and I/O.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("point ({x}, {y}) outside field validity region: {reason}")]
    Domain { x: f64, y: f64, reason: String },

    #[error("gradient of psi vanishes near ({x}, {y})")]
    SingularGradient { x: f64, y: f64 },

    #[error("jacobian determinant {det:e} below threshold {threshold:e}")]
    SingularJacobian { det: f64, threshold: f64 },

    #[error("metric determinant {det:e} is not positive")]
    DegenerateMetric { det: f64 },

    #[error("conduction tensor lost positive definiteness (xx={xx}, xy={xy}, yy={yy})")]
    IndefiniteTensor { xx: f64, xy: f64, yy: f64 },

    #[error("theta is undefined at the frame center ({x0}, {y0})")]
    CenterPoint { x0: f64, y0: f64 },

    #[error("step controller failed at t={t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("streamline reparameterization denominator vanished at ({x}, {y})")]
    DenominatorVanishing { x: f64, y: f64 },

    #[error("no sign change of psi - {target} found along the search ray")]
    BracketFailure { target: f64 },

    #[error("contour failed to close after 2 pi: gap {gap:e} exceeds {tol:e}")]
    ClosureFailure { gap: f64, tol: f64 },

    #[error("iterative solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("assembled operator is not positive definite (p^T A p = {pap:e})")]
    IndefiniteOperator { pap: f64 },

    #[error("field lattices are incompatible: {0}")]
    LatticeMismatch(String),

    #[error("streamline left the computational box at (zeta={zeta}, eta={eta})")]
    OutOfBox { zeta: f64, eta: f64 },

    #[error("boundary quadrature integrand changes sign at eta index {index}")]
    SignChange { index: usize },

    #[error("cell length must be positive, got {0}")]
    NonPositiveLength(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid file schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GridError>;

impl GridError {
    /// Process exit code for the CLI: 2 config, 3 numerical, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            GridError::Config(_) => 2,
            GridError::Schema(_) | GridError::Io(_) | GridError::Json(_) => 4,
            _ => 3,
        }
    }
}
