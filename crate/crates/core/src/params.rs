use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Model parameters shared by the microscopic and macroscopic layers.
///
/// `a` is the interaction strength in the exchange rates (must satisfy
/// `a > -1/2` so all rates stay positive), `d` the spatial dimension and
/// `n` the lattice scale: the microscopic domain is
/// `{-n+1, ..., n-1} x {0, ..., n-1}^(d-1)` with the first coordinate walled
/// by reservoirs and the transverse coordinates periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub d: usize,
    pub n: usize,
}

impl ModelParams {
    pub fn new(a: f64, d: usize, n: usize) -> Result<Self> {
        if !a.is_finite() || a <= -0.5 {
            return Err(Error::invalid(format!(
                "interaction strength a = {a} must be finite and > -1/2"
            )));
        }
        if d < 1 {
            return Err(Error::invalid("dimension d must be >= 1"));
        }
        if n < 2 {
            return Err(Error::invalid("lattice scale n must be >= 2"));
        }
        Ok(ModelParams { a, d, n })
    }
}
