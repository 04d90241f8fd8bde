//! Flux-form finite-volume operators on slab meshes.
//!
//! All operators share one ghost convention: across a wall the ghost value of
//! a field `v` with face value `f` is `2 f - v`, so the face value is the
//! arithmetic mean of node and ghost and the wall flux uses the half-cell
//! gradient `2 (v - f) / h`. Transverse directions wrap periodically.
//!
//! Edges carry the quadrature: an interior slab edge has volume `h1 * A_t`,
//! a wall edge `h1/2 * A_t` (its inner half), and a transverse edge one cell
//! volume. With these weights the discrete duality
//! `<-div(sigma grad g), w> = B_sigma(g, w)` holds exactly, which the
//! variational layer relies on.

use crate::boundary::FaceValues;
use crate::mesh::Mesh;

/// Per-edge scalar data (densities, mobilities, quadrature weights).
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    /// Slab-direction edges: `(m1 + 1) * T` values; edge `j` at transverse
    /// index `t` separates nodes `(j-1, t)` and `(j, t)`; `j = 0` and
    /// `j = m1` are wall edges.
    pub dir0: Vec<f64>,
    /// One array per transverse dimension, node-indexed: the edge from a node
    /// to its `+1` periodic neighbor in that dimension.
    pub trans: Vec<Vec<f64>>,
}

impl EdgeWeights {
    pub fn uniform(mesh: &Mesh, value: f64) -> Self {
        let t = mesh.transverse_count();
        EdgeWeights {
            dir0: vec![value; (mesh.m1 + 1) * t],
            trans: vec![vec![value; mesh.node_count()]; mesh.d - 1],
        }
    }

    /// Applies `f` to every edge value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> EdgeWeights {
        EdgeWeights {
            dir0: self.dir0.iter().map(|&x| f(x)).collect(),
            trans: self
                .trans
                .iter()
                .map(|arr| arr.iter().map(|&x| f(x)).collect())
                .collect(),
        }
    }
}

/// Midpoint density on every edge: the mean of the two adjacent node values,
/// and on wall edges the mean of the node and the reservoir face value.
///
/// For the quadratic flux `phi` this makes the chord slope across any edge
/// equal `phi'` at the edge density, which keeps the discrete dissipation
/// inequalities exact.
pub fn edge_densities(mesh: &Mesh, rho: &[f64], faces: &FaceValues) -> EdgeWeights {
    let tc = mesh.transverse_count();
    let m1 = mesh.m1;
    let mut dir0 = vec![0.0; (m1 + 1) * tc];
    for t in 0..tc {
        dir0[t] = 0.5 * (rho[mesh.node_index(0, t)] + faces.left[t]);
        for j in 1..m1 {
            dir0[j * tc + t] =
                0.5 * (rho[mesh.node_index(j - 1, t)] + rho[mesh.node_index(j, t)]);
        }
        dir0[m1 * tc + t] = 0.5 * (rho[mesh.node_index(m1 - 1, t)] + faces.right[t]);
    }
    let mut trans = Vec::with_capacity(mesh.d - 1);
    for k in 0..mesh.d - 1 {
        let mut arr = vec![0.0; mesh.node_count()];
        for i1 in 0..m1 {
            for t in 0..tc {
                let i = mesh.node_index(i1, t);
                let j = mesh.node_index(i1, mesh.transverse_neighbor(t, k, 1));
                arr[i] = 0.5 * (rho[i] + rho[j]);
            }
        }
        trans.push(arr);
    }
    EdgeWeights { dir0, trans }
}

/// Discrete Laplacian in flux form with reflected ghosts: `out = div grad v`
/// where `v` has face values `faces` on the walls.
pub fn laplacian(mesh: &Mesh, v: &[f64], faces: &FaceValues, out: &mut [f64]) {
    let tc = mesh.transverse_count();
    let m1 = mesh.m1;
    let h1 = mesh.h(0);
    let inv_h1_sq = 1.0 / (h1 * h1);
    for t in 0..tc {
        for i1 in 0..m1 {
            let i = mesh.node_index(i1, t);
            let lower = if i1 == 0 {
                2.0 * (v[i] - faces.left[t])
            } else {
                v[i] - v[i - tc]
            };
            let upper = if i1 == m1 - 1 {
                2.0 * (faces.right[t] - v[i])
            } else {
                v[i + tc] - v[i]
            };
            out[i] = (upper - lower) * inv_h1_sq;
        }
    }
    if mesh.d > 1 {
        let ht = mesh.h(1);
        let inv_ht_sq = 1.0 / (ht * ht);
        for k in 0..mesh.d - 1 {
            for t in 0..tc {
                let tp = mesh.transverse_neighbor(t, k, 1);
                let tm = mesh.transverse_neighbor(t, k, -1);
                for i1 in 0..m1 {
                    let i = mesh.node_index(i1, t);
                    out[i] += (v[mesh.node_index(i1, tp)] - 2.0 * v[i]
                        + v[mesh.node_index(i1, tm)])
                        * inv_ht_sq;
                }
            }
        }
    }
}

/// Weighted divergence form `out = div(sigma grad v)` with the same ghost
/// convention; `sigma` lives on edges.
pub fn weighted_laplacian(
    mesh: &Mesh,
    sigma: &EdgeWeights,
    v: &[f64],
    faces: &FaceValues,
    out: &mut [f64],
) {
    let tc = mesh.transverse_count();
    let m1 = mesh.m1;
    let h1 = mesh.h(0);
    let inv_h1_sq = 1.0 / (h1 * h1);
    for t in 0..tc {
        for i1 in 0..m1 {
            let i = mesh.node_index(i1, t);
            let flux_lo = if i1 == 0 {
                sigma.dir0[t] * 2.0 * (v[i] - faces.left[t])
            } else {
                sigma.dir0[i1 * tc + t] * (v[i] - v[i - tc])
            };
            let flux_hi = if i1 == m1 - 1 {
                sigma.dir0[m1 * tc + t] * 2.0 * (faces.right[t] - v[i])
            } else {
                sigma.dir0[(i1 + 1) * tc + t] * (v[i + tc] - v[i])
            };
            out[i] = (flux_hi - flux_lo) * inv_h1_sq;
        }
    }
    if mesh.d > 1 {
        let ht = mesh.h(1);
        let inv_ht_sq = 1.0 / (ht * ht);
        for k in 0..mesh.d - 1 {
            let w = &sigma.trans[k];
            for t in 0..tc {
                let tp = mesh.transverse_neighbor(t, k, 1);
                let tm = mesh.transverse_neighbor(t, k, -1);
                for i1 in 0..m1 {
                    let i = mesh.node_index(i1, t);
                    let im = mesh.node_index(i1, tm);
                    let ip = mesh.node_index(i1, tp);
                    out[i] += (w[i] * (v[ip] - v[i]) - w[im] * (v[i] - v[im])) * inv_ht_sq;
                }
            }
        }
    }
}

/// Weighted edge bilinear form
/// `B_w(v, u) = sum_e w_e grad_e(v) grad_e(u) vol_e`
/// with each field reflected through its own face values.
pub fn edge_bilinear(
    mesh: &Mesh,
    weights: &EdgeWeights,
    v: &[f64],
    v_faces: &FaceValues,
    u: &[f64],
    u_faces: &FaceValues,
) -> f64 {
    let tc = mesh.transverse_count();
    let m1 = mesh.m1;
    let h1 = mesh.h(0);
    let area_t = mesh.h(1).powi(mesh.d as i32 - 1);
    let mut acc = 0.0;
    for t in 0..tc {
        // left wall edge: half-cell volume, half-cell gradient
        let i0 = mesh.node_index(0, t);
        let gv = 2.0 * (v[i0] - v_faces.left[t]) / h1;
        let gu = 2.0 * (u[i0] - u_faces.left[t]) / h1;
        acc += weights.dir0[t] * gv * gu * (0.5 * h1 * area_t);
        for j in 1..m1 {
            let ia = mesh.node_index(j - 1, t);
            let ib = mesh.node_index(j, t);
            let gv = (v[ib] - v[ia]) / h1;
            let gu = (u[ib] - u[ia]) / h1;
            acc += weights.dir0[j * tc + t] * gv * gu * (h1 * area_t);
        }
        let il = mesh.node_index(m1 - 1, t);
        let gv = 2.0 * (v_faces.right[t] - v[il]) / h1;
        let gu = 2.0 * (u_faces.right[t] - u[il]) / h1;
        acc += weights.dir0[m1 * tc + t] * gv * gu * (0.5 * h1 * area_t);
    }
    if mesh.d > 1 {
        let ht = mesh.h(1);
        let vol = mesh.cell_volume();
        for k in 0..mesh.d - 1 {
            let w = &weights.trans[k];
            for t in 0..tc {
                let tp = mesh.transverse_neighbor(t, k, 1);
                for i1 in 0..m1 {
                    let i = mesh.node_index(i1, t);
                    let j = mesh.node_index(i1, tp);
                    let gv = (v[j] - v[i]) / ht;
                    let gu = (u[j] - u[i]) / ht;
                    acc += w[i] * gv * gu * vol;
                }
            }
        }
    }
    acc
}

/// Weighted edge energy `sum_e w_e |grad_e v|^2 vol_e`.
pub fn edge_energy(mesh: &Mesh, weights: &EdgeWeights, v: &[f64], v_faces: &FaceValues) -> f64 {
    edge_bilinear(mesh, weights, v, v_faces, v, v_faces)
}

/// Node-based squared gradient `|grad v|^2` per node: centered differences in
/// the interior, one-sided in the first and last slab layers, centered with
/// wrap transversally. Uses interior values only (no reservoir data).
pub fn node_gradient_sq(mesh: &Mesh, v: &[f64]) -> Vec<f64> {
    let tc = mesh.transverse_count();
    let m1 = mesh.m1;
    let h1 = mesh.h(0);
    let mut out = vec![0.0; mesh.node_count()];
    for t in 0..tc {
        for i1 in 0..m1 {
            let i = mesh.node_index(i1, t);
            let g = if i1 == 0 {
                (v[i + tc] - v[i]) / h1
            } else if i1 == m1 - 1 {
                (v[i] - v[i - tc]) / h1
            } else {
                (v[i + tc] - v[i - tc]) / (2.0 * h1)
            };
            out[i] = g * g;
        }
    }
    if mesh.d > 1 {
        let ht = mesh.h(1);
        for k in 0..mesh.d - 1 {
            for t in 0..tc {
                let tp = mesh.transverse_neighbor(t, k, 1);
                let tm = mesh.transverse_neighbor(t, k, -1);
                for i1 in 0..m1 {
                    let i = mesh.node_index(i1, t);
                    let g = (v[mesh.node_index(i1, tp)] - v[mesh.node_index(i1, tm)])
                        / (2.0 * ht);
                    out[i] += g * g;
                }
            }
        }
    }
    out
}

/// Discrete surface pairing on the walls:
/// `int_{right face} psi d_1 g dS - int_{left face} psi d_1 g dS`,
/// with the outward-independent one-sided normal derivative of a field `g`
/// vanishing on the faces: `d_1 g = 2 g_node / h` on the left wall and
/// `-2 g_node / h` on the right wall.
pub fn wall_surface_pairing(mesh: &Mesh, psi_faces: &FaceValues, g: &[f64]) -> f64 {
    let tc = mesh.transverse_count();
    let h1 = mesh.h(0);
    let area_t = mesh.h(1).powi(mesh.d as i32 - 1);
    let mut acc = 0.0;
    for t in 0..tc {
        let g_left = g[mesh.node_index(0, t)];
        let g_right = g[mesh.node_index(mesh.m1 - 1, t)];
        acc += psi_faces.right[t] * (-2.0 * g_right / h1) * area_t;
        acc -= psi_faces.left[t] * (2.0 * g_left / h1) * area_t;
    }
    acc
}

/// Volume-weighted inner product of nodal fields.
pub fn dot_volume(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let vol = mesh.cell_volume();
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * vol
}

pub fn zero_faces(mesh: &Mesh) -> FaceValues {
    FaceValues {
        left: vec![0.0; mesh.transverse_count()],
        right: vec![0.0; mesh.transverse_count()],
    }
}
