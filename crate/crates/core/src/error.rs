use thiserror::Error;

/// Unified error type for domain violations, size caps, and solver failures.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A scalar argument lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Model parameters violate a structural constraint.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Two objects that must share a mesh or lattice disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Requested time step exceeds the stability limit.
    #[error("time step {dt} exceeds the stability bound {bound}")]
    CflViolation { dt: f64, bound: f64 },

    /// The exact reference is capped to tiny state spaces.
    #[error("state space too large: {0}")]
    StateSpaceTooLarge(String),

    /// A linear or nonlinear solve did not reach the required residual.
    #[error("solver failure: {0}")]
    SolverFailure(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
