//! Reservoir density profiles on the two walls of the slab.
//!
//! The macroscopic domain is `[-1, 1] x T^(d-1)`; its boundary consists of
//! the faces `u_1 = -1` (left) and `u_1 = +1` (right). A profile assigns a
//! density in (0, 1) to every point of each face. Both the lattice dynamics
//! and the PDE solvers read the profile only at finitely many transverse
//! points, so a profile is an analytic rule plus a sampler.

use serde::{Deserialize, Serialize};

use crate::{Error, Mesh, Result};

/// One of the two reservoir walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Face {
    Left,
    Right,
}

/// Reservoir density rule on the two faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryProfile {
    /// The same density on both faces.
    Constant { value: f64 },
    /// A constant per face (the restriction of an affine function of u_1).
    TwoSided { left: f64, right: f64 },
    /// Samples on a uniform transverse torus grid (one transverse dimension),
    /// read back with periodic linear interpolation.
    Tabulated { left: Vec<f64>, right: Vec<f64> },
}

impl BoundaryProfile {
    pub fn constant(value: f64) -> Result<Self> {
        let p = BoundaryProfile::Constant { value };
        p.validate()?;
        Ok(p)
    }

    pub fn two_sided(left: f64, right: f64) -> Result<Self> {
        let p = BoundaryProfile::TwoSided { left, right };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if left.is_empty() || left.len() != right.len() {
            return Err(Error::invalid(
                "tabulated profile needs equal, nonempty face tables",
            ));
        }
        let p = BoundaryProfile::Tabulated { left, right };
        p.validate()?;
        Ok(p)
    }

    /// Every stored value must lie strictly inside (0, 1).
    pub fn validate(&self) -> Result<()> {
        let check = |v: f64| -> Result<()> {
            if !(v.is_finite() && v > 0.0 && v < 1.0) {
                Err(Error::domain(format!(
                    "reservoir density {v} must lie strictly inside (0, 1)"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            BoundaryProfile::Constant { value } => check(*value),
            BoundaryProfile::TwoSided { left, right } => {
                check(*left)?;
                check(*right)
            }
            BoundaryProfile::Tabulated { left, right } => {
                for &v in left.iter().chain(right.iter()) {
                    check(v)?;
                }
                Ok(())
            }
        }
    }

    /// Density at transverse position `u` (coordinates in [0, 1)) on `face`.
    pub fn value(&self, face: Face, u: &[f64]) -> f64 {
        match self {
            BoundaryProfile::Constant { value } => *value,
            BoundaryProfile::TwoSided { left, right } => match face {
                Face::Left => *left,
                Face::Right => *right,
            },
            BoundaryProfile::Tabulated { left, right } => {
                let table = match face {
                    Face::Left => left,
                    Face::Right => right,
                };
                let m = table.len();
                let x = u.first().copied().unwrap_or(0.0).rem_euclid(1.0) * m as f64;
                let i = (x.floor() as usize).min(m - 1);
                let frac = x - i as f64;
                let j = (i + 1) % m;
                table[i] * (1.0 - frac) + table[j] * frac
            }
        }
    }

    /// Samples at the transverse cell centers of `mesh`.
    pub fn sample_mesh(&self, mesh: &Mesh) -> FaceValues {
        let mut left = Vec::with_capacity(mesh.transverse_count());
        let mut right = Vec::with_capacity(mesh.transverse_count());
        let mut u = vec![0.0; mesh.d - 1];
        for t in 0..mesh.transverse_count() {
            mesh.transverse_coords(t, &mut u);
            left.push(self.value(Face::Left, &u));
            right.push(self.value(Face::Right, &u));
        }
        FaceValues { left, right }
    }

    /// Samples at the transverse lattice points `j / n` of the microscopic
    /// domain at scale `n` in dimension `d`.
    pub fn sample_lattice(&self, d: usize, n: usize) -> FaceValues {
        let count = n.pow((d - 1) as u32);
        let mut left = Vec::with_capacity(count);
        let mut right = Vec::with_capacity(count);
        let mut u = vec![0.0; d - 1];
        for t in 0..count {
            // Row-major digits: the trailing transverse dimension varies fastest.
            let mut rem = t;
            for k in (0..d - 1).rev() {
                u[k] = (rem % n) as f64 / n as f64;
                rem /= n;
            }
            left.push(self.value(Face::Left, &u));
            right.push(self.value(Face::Right, &u));
        }
        FaceValues { left, right }
    }
}

/// Concrete per-face samples on some transverse grid, indexed like the
/// transverse block of the owning mesh or lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceValues {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl FaceValues {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// Applies `f` to every face value (e.g. to move to phi-variables).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> FaceValues {
        FaceValues {
            left: self.left.iter().map(|&v| f(v)).collect(),
            right: self.right.iter().map(|&v| f(v)).collect(),
        }
    }
}
