//! Cell-centered meshes on the slab `[-1, 1] x T^(d-1)` and the field /
//! trajectory containers used by the PDE and functional layers.
//!
//! Nodes sit at cell centers: `u_1 = -1 + (i + 1/2) h_1` with `h_1 = 2 / m1`,
//! and transversally at `(j + 1/2) h_t` with `h_t = 1 / mt`, periodic. The
//! walls `u_1 = -1, +1` are faces of the first and last cell layers, half a
//! cell away from the nearest node; boundary data enters through ghost
//! values by reflection.

use serde::{Deserialize, Serialize};

use crate::boundary::FaceValues;
use crate::{Error, Result};

/// Uniform cell-centered mesh: `m1` cells across the slab, `mt` cells per
/// transverse direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mesh {
    pub d: usize,
    pub m1: usize,
    pub mt: usize,
}

impl Mesh {
    pub fn new(d: usize, m1: usize, mt: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::invalid("mesh dimension must be >= 1"));
        }
        if m1 < 2 {
            return Err(Error::invalid("mesh needs at least 2 cells across the slab"));
        }
        let mt = if d == 1 { 1 } else { mt };
        if d > 1 && mt < 2 {
            return Err(Error::invalid(
                "transverse resolution must be >= 2 in dimension >= 2",
            ));
        }
        Ok(Mesh { d, m1, mt })
    }

    /// Cells per transverse slice (`mt^(d-1)`).
    pub fn transverse_count(&self) -> usize {
        self.mt.pow((self.d - 1) as u32)
    }

    pub fn node_count(&self) -> usize {
        self.m1 * self.transverse_count()
    }

    /// Grid spacing in direction `dir` (0 is the slab direction).
    pub fn h(&self, dir: usize) -> f64 {
        if dir == 0 {
            2.0 / self.m1 as f64
        } else {
            1.0 / self.mt as f64
        }
    }

    pub fn h_min(&self) -> f64 {
        let mut h = self.h(0);
        if self.d > 1 {
            h = h.min(self.h(1));
        }
        h
    }

    pub fn cell_volume(&self) -> f64 {
        self.h(0) * self.h(1).powi(self.d as i32 - 1)
    }

    /// Flat index of the node with slab index `i1` and transverse index `t`.
    #[inline]
    pub fn node_index(&self, i1: usize, t: usize) -> usize {
        i1 * self.transverse_count() + t
    }

    /// Stride of transverse dimension `k` (0-based among transverse dims).
    #[inline]
    pub fn transverse_stride(&self, k: usize) -> usize {
        self.mt.pow((self.d - 2 - k) as u32)
    }

    /// Transverse neighbor of transverse index `t` in dimension `k`,
    /// `step = +1` or `-1`, with periodic wrap.
    #[inline]
    pub fn transverse_neighbor(&self, t: usize, k: usize, step: isize) -> usize {
        let stride = self.transverse_stride(k);
        let j = (t / stride) % self.mt;
        let jn = (j as isize + step).rem_euclid(self.mt as isize) as usize;
        t - j * stride + jn * stride
    }

    /// Coordinates of the transverse cell center for flat transverse index `t`.
    pub fn transverse_coords(&self, t: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.d - 1);
        let ht = self.h(1);
        let mut rem = t;
        for k in (0..self.d - 1).rev() {
            let j = rem % self.mt;
            rem /= self.mt;
            out[k] = (j as f64 + 0.5) * ht;
        }
    }

    /// Full coordinates `(u_1, u_2, ...)` of node `i`.
    pub fn node_coords(&self, i: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.d);
        let tcount = self.transverse_count();
        let i1 = i / tcount;
        out[0] = -1.0 + (i1 as f64 + 0.5) * self.h(0);
        let (head, tail) = out.split_at_mut(1);
        let _ = head;
        self.transverse_coords(i % tcount, tail);
    }

    /// Volume-weighted L1 norm of nodal values.
    pub fn l1_norm(&self, v: &[f64]) -> f64 {
        let vol = self.cell_volume();
        v.iter().map(|x| x.abs()).sum::<f64>() * vol
    }

    /// Volume-weighted L2 norm of nodal values.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        let vol = self.cell_volume();
        (v.iter().map(|x| x * x).sum::<f64>() * vol).sqrt()
    }
}

/// A density (or generic scalar) field on a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub mesh: Mesh,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::shape(format!(
                "field has {} values for a mesh with {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        Ok(DensityField { mesh, values })
    }

    pub fn constant(mesh: Mesh, value: f64) -> Self {
        let n = mesh.node_count();
        DensityField {
            mesh,
            values: vec![value; n],
        }
    }

    /// Field sampled from a coordinate rule.
    pub fn from_fn(mesh: Mesh, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut u = vec![0.0; mesh.d];
        let values = (0..mesh.node_count())
            .map(|i| {
                mesh.node_coords(i, &mut u);
                f(&u)
            })
            .collect();
        DensityField { mesh, values }
    }

    /// True if every value lies in [0, 1] up to `tol`.
    pub fn is_density(&self, tol: f64) -> bool {
        self.values
            .iter()
            .all(|&v| v >= -tol && v <= 1.0 + tol && v.is_finite())
    }

    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        if self.mesh != other.mesh {
            return Err(Error::shape("L1 distance of fields on different meshes"));
        }
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x - y)
            .collect();
        Ok(self.mesh.l1_norm(&diff))
    }

    pub fn l2_distance(&self, other: &DensityField) -> Result<f64> {
        if self.mesh != other.mesh {
            return Err(Error::shape("L2 distance of fields on different meshes"));
        }
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x - y)
            .collect();
        Ok(self.mesh.l2_norm(&diff))
    }
}

/// A time-indexed family of fields on a fixed mesh, with the reservoir trace
/// the path satisfies on the walls.
///
/// `frames[n]` holds the nodal values at time `n * dt`; the reservoir samples
/// are carried along so path functionals can include the wall-adjacent
/// gradient without re-deriving boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mesh: Mesh,
    pub dt: f64,
    pub frames: Vec<Vec<f64>>,
    pub boundary: FaceValues,
}

impl Trajectory {
    pub fn new(mesh: Mesh, dt: f64, frames: Vec<Vec<f64>>, boundary: FaceValues) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::shape("trajectory needs at least one frame"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("trajectory time step must be positive"));
        }
        if frames.iter().any(|f| f.len() != mesh.node_count()) {
            return Err(Error::shape("trajectory frame size differs from mesh"));
        }
        if boundary.len() != mesh.transverse_count() {
            return Err(Error::shape(
                "trajectory boundary samples differ from the mesh transverse grid",
            ));
        }
        Ok(Trajectory {
            mesh,
            dt,
            frames,
            boundary,
        })
    }

    pub fn total_time(&self) -> f64 {
        (self.frames.len() - 1) as f64 * self.dt
    }

    pub fn frame_field(&self, n: usize) -> DensityField {
        DensityField {
            mesh: self.mesh,
            values: self.frames[n].clone(),
        }
    }

    /// Time reversal: frame `n` becomes frame `N - n`.
    pub fn reversed(&self) -> Trajectory {
        let mut frames = self.frames.clone();
        frames.reverse();
        Trajectory {
            mesh: self.mesh,
            dt: self.dt,
            frames,
            boundary: self.boundary.clone(),
        }
    }

    /// Restriction to frames `[start, end]` (inclusive), keeping `dt`.
    pub fn window(&self, start: usize, end: usize) -> Result<Trajectory> {
        if start >= end || end >= self.frames.len() {
            return Err(Error::shape("invalid trajectory window"));
        }
        Ok(Trajectory {
            mesh: self.mesh,
            dt: self.dt,
            frames: self.frames[start..=end].to_vec(),
            boundary: self.boundary.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_coordinates_are_cell_centers() {
        let mesh = Mesh::new(1, 4, 1).unwrap();
        let mut u = [0.0];
        mesh.node_coords(0, &mut u);
        assert!((u[0] + 0.75).abs() < 1e-15);
        mesh.node_coords(3, &mut u);
        assert!((u[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn transverse_wrap_is_periodic() {
        let mesh = Mesh::new(2, 4, 3).unwrap();
        assert_eq!(mesh.transverse_neighbor(2, 0, 1), 0);
        assert_eq!(mesh.transverse_neighbor(0, 0, -1), 2);
        let mesh3 = Mesh::new(3, 4, 3).unwrap();
        // second transverse dim has stride 1, first has stride 3
        assert_eq!(mesh3.transverse_neighbor(5, 1, 1), 3);
        assert_eq!(mesh3.transverse_neighbor(5, 0, 1), 8);
    }

    #[test]
    fn norms_match_hand_summation() {
        let mesh = Mesh::new(1, 4, 1).unwrap();
        // cell volume is 1/2
        assert!((mesh.l1_norm(&[1.0, -1.0, 2.0, 0.0]) - 2.0).abs() < 1e-15);
        assert!((mesh.l2_norm(&[2.0, 0.0, 0.0, 0.0]) - (4.0_f64 * 0.5).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn volume_adds_up_to_domain_measure() {
        let mesh = Mesh::new(2, 6, 5).unwrap();
        let total = mesh.cell_volume() * mesh.node_count() as f64;
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_reversal_swaps_endpoints() {
        let mesh = Mesh::new(1, 2, 1).unwrap();
        let b = FaceValues {
            left: vec![0.3],
            right: vec![0.3],
        };
        let traj =
            Trajectory::new(mesh, 0.5, vec![vec![0.0, 0.0], vec![1.0, 1.0]], b).unwrap();
        let rev = traj.reversed();
        assert_eq!(rev.frames[0], vec![1.0, 1.0]);
        assert_eq!(rev.frames[1], vec![0.0, 0.0]);
        assert_eq!(rev.total_time(), traj.total_time());
    }
}
