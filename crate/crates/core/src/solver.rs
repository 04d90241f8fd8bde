//! Linear solvers for the discrete elliptic problems: a direct tridiagonal
//! solve across the slab in one dimension and Jacobi-preconditioned conjugate
//! gradients otherwise. The operator is `-div(sigma grad g)` with `g`
//! vanishing on the walls, which is symmetric positive definite.

use crate::operators::{weighted_laplacian, zero_faces, EdgeWeights};
use crate::{Error, Mesh, Result};

/// Relative residual target for the iterative solver.
const CG_REL_TOL: f64 = 1e-13;

/// Solves `-div(sigma grad g) = f` with zero face values; returns `g`.
pub fn solve_weighted_poisson(mesh: &Mesh, sigma: &EdgeWeights, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != mesh.node_count() {
        return Err(Error::shape("right-hand side does not match the mesh"));
    }
    if mesh.d == 1 {
        Ok(solve_tridiagonal(mesh, sigma, f))
    } else {
        solve_pcg(mesh, sigma, f)
    }
}

fn solve_tridiagonal(mesh: &Mesh, sigma: &EdgeWeights, f: &[f64]) -> Vec<f64> {
    let m = mesh.m1;
    let h2 = mesh.h(0) * mesh.h(0);
    // Row i: diag_i g_i - sigma_i/h2 g_{i-1} - sigma_{i+1}/h2 g_{i+1} = f_i,
    // wall edges count twice (half-cell gradient through the reflected ghost).
    let mut diag = vec![0.0; m];
    let mut lower = vec![0.0; m]; // lower[i] multiplies g_{i-1}
    let mut upper = vec![0.0; m];
    for i in 0..m {
        let w_lo = sigma.dir0[i] * if i == 0 { 2.0 } else { 1.0 };
        let w_hi = sigma.dir0[i + 1] * if i == m - 1 { 2.0 } else { 1.0 };
        diag[i] = (w_lo + w_hi) / h2;
        if i > 0 {
            lower[i] = -sigma.dir0[i] / h2;
        }
        if i < m - 1 {
            upper[i] = -sigma.dir0[i + 1] / h2;
        }
    }
    // Thomas algorithm.
    let mut c = vec![0.0; m];
    let mut dvec = vec![0.0; m];
    c[0] = upper[0] / diag[0];
    dvec[0] = f[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        dvec[i] = (f[i] - lower[i] * dvec[i - 1]) / denom;
    }
    let mut g = vec![0.0; m];
    g[m - 1] = dvec[m - 1];
    for i in (0..m - 1).rev() {
        g[i] = dvec[i] - c[i] * g[i + 1];
    }
    g
}

/// Diagonal of the operator, used as the Jacobi preconditioner.
fn operator_diagonal(mesh: &Mesh, sigma: &EdgeWeights) -> Vec<f64> {
    let tc = mesh.transverse_count();
    let m1 = mesh.m1;
    let h1_2 = mesh.h(0) * mesh.h(0);
    let mut diag = vec![0.0; mesh.node_count()];
    for t in 0..tc {
        for i1 in 0..m1 {
            let i = mesh.node_index(i1, t);
            let w_lo = sigma.dir0[i1 * tc + t] * if i1 == 0 { 2.0 } else { 1.0 };
            let w_hi = sigma.dir0[(i1 + 1) * tc + t] * if i1 == m1 - 1 { 2.0 } else { 1.0 };
            diag[i] = (w_lo + w_hi) / h1_2;
        }
    }
    if mesh.d > 1 {
        let ht_2 = mesh.h(1) * mesh.h(1);
        for k in 0..mesh.d - 1 {
            let w = &sigma.trans[k];
            for t in 0..tc {
                let tm = mesh.transverse_neighbor(t, k, -1);
                for i1 in 0..m1 {
                    let i = mesh.node_index(i1, t);
                    diag[i] += (w[i] + w[mesh.node_index(i1, tm)]) / ht_2;
                }
            }
        }
    }
    diag
}

fn solve_pcg(mesh: &Mesh, sigma: &EdgeWeights, f: &[f64]) -> Result<Vec<f64>> {
    let n = mesh.node_count();
    let zf = zero_faces(mesh);
    let diag = operator_diagonal(mesh, sigma);
    let apply = |x: &[f64], out: &mut [f64]| {
        weighted_laplacian(mesh, sigma, x, &zf, out);
        out.iter_mut().for_each(|v| *v = -*v);
    };

    let mut x = vec![0.0; n];
    let mut r = f.to_vec();
    let norm_f = dot(&r, &r).sqrt();
    if norm_f == 0.0 {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = 40 * n + 200;
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= CG_REL_TOL * norm_f {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = dot(&r, &r).sqrt() / norm_f;
    Err(Error::SolverFailure(format!(
        "conjugate gradients stalled at relative residual {rel:.3e}"
    )))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
