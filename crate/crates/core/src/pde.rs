//! Hydrostatic and hydrodynamic equations of the density.
//!
//! The stationary profile solves `lap phi(rho) = 0` with reservoir densities
//! on the walls; since `phi` is strictly increasing this is a linear problem
//! in `w = phi(rho)` followed by a pointwise inversion. The evolution
//! `d_t rho = lap phi(rho)` is integrated by explicit Euler in flux form.
//! The default step keeps the update monotone (order-preserving), which is
//! strictly tighter than the plain stability bound because wall cells carry
//! a reflected ghost and hence a heavier diagonal.

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryProfile, FaceValues};
use crate::mesh::{DensityField, Mesh, Trajectory};
use crate::operators::{laplacian, EdgeWeights};
use crate::solver::solve_weighted_poisson;
use crate::transport::{phi, phi_inverse, phi_prime_max};
use crate::{Error, ModelParams, Result};

/// Largest accepted explicit-Euler step: `0.9 h_min^2 / (2 d max phi')`.
pub fn cfl_bound(params: &ModelParams, mesh: &Mesh) -> f64 {
    let h = mesh.h_min();
    0.9 * h * h / (2.0 * mesh.d as f64 * phi_prime_max(params))
}

/// Default step, tightened so the update is monotone also in wall cells,
/// whose reflected ghost doubles one flux coefficient:
/// `0.9 h_min^2 / ((2 d + 1) max phi')`.
pub fn monotone_dt(params: &ModelParams, mesh: &Mesh) -> f64 {
    let h = mesh.h_min();
    0.9 * h * h / ((2.0 * mesh.d as f64 + 1.0) * phi_prime_max(params))
}

/// Stationary density profile: solves the linear wall-value problem for
/// `w = phi(rho)` and inverts pointwise. The discrete residual of `w` is
/// driven below `1e-10` (relative) or the solve fails.
pub fn solve_elliptic(b: &BoundaryProfile, params: &ModelParams, mesh: &Mesh) -> Result<DensityField> {
    b.validate()?;
    if mesh.d != params.d {
        return Err(Error::shape("mesh and parameters disagree on dimension"));
    }
    let phi_faces = b.sample_mesh(mesh).map(|v| phi(params, v));
    let n = mesh.node_count();
    // Split off the affine ghost contribution: lap_f(w) = lap_0(w) + lap_f(0).
    let mut rhs = vec![0.0; n];
    laplacian(mesh, &vec![0.0; n], &phi_faces, &mut rhs);
    let ones = EdgeWeights::uniform(mesh, 1.0);
    let w = solve_weighted_poisson(mesh, &ones, &rhs)?;

    let mut residual = vec![0.0; n];
    laplacian(mesh, &w, &phi_faces, &mut residual);
    let scale = w.iter().fold(1.0_f64, |m, &x| m.max(x.abs())) / (mesh.h_min() * mesh.h_min());
    let max_res = residual.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    if max_res > 1e-10 * scale.max(1.0) {
        return Err(Error::SolverFailure(format!(
            "stationary solve residual {max_res:.3e} exceeds tolerance"
        )));
    }

    let hi = 1.0 + params.a.min(0.0); // range top is 1 + a for a < 0, else >= 1
    let _ = hi;
    let values = w
        .iter()
        .map(|&y| phi_inverse(params, y))
        .collect::<Result<Vec<f64>>>()?;
    DensityField::new(*mesh, values)
}

/// One explicit-Euler update in flux form; returns the clipped mass.
fn euler_step(
    mesh: &Mesh,
    params: &ModelParams,
    rho: &mut [f64],
    phi_buf: &mut [f64],
    lap: &mut [f64],
    phi_faces: &FaceValues,
    dt: f64,
) -> f64 {
    for (w, &r) in phi_buf.iter_mut().zip(rho.iter()) {
        *w = phi(params, r);
    }
    laplacian(mesh, phi_buf, phi_faces, lap);
    let vol = mesh.cell_volume();
    let mut clipped = 0.0;
    for (r, &l) in rho.iter_mut().zip(lap.iter()) {
        let next = *r + dt * l;
        let bounded = next.clamp(0.0, 1.0);
        clipped += (next - bounded).abs() * vol;
        *r = bounded;
    }
    clipped
}

/// Result of a parabolic integration: the recorded trajectory plus the total
/// mass removed by clipping to [0, 1] (floating-point noise scale).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParabolicRun {
    pub trajectory: Trajectory,
    pub clip_mass: f64,
    pub steps: usize,
    pub dt_used: f64,
}

/// Integrates `d_t rho = lap phi(rho)` from `rho0` up to time `t_end`.
///
/// `dt = None` picks the monotone default; an explicit `dt` is validated
/// against [`cfl_bound`] and then rounded down so the horizon is an integer
/// number of steps. Every step is recorded as a frame.
pub fn solve_parabolic(
    rho0: &DensityField,
    b: &BoundaryProfile,
    params: &ModelParams,
    t_end: f64,
    dt: Option<f64>,
) -> Result<ParabolicRun> {
    solve_parabolic_strided(rho0, b, params, t_end, dt, 1)
}

/// As [`solve_parabolic`], recording every `stride`-th step (the step count
/// is rounded up to a multiple of `stride` so the final time is recorded).
pub fn solve_parabolic_strided(
    rho0: &DensityField,
    b: &BoundaryProfile,
    params: &ModelParams,
    t_end: f64,
    dt: Option<f64>,
    stride: usize,
) -> Result<ParabolicRun> {
    b.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("horizon t_end must be positive"));
    }
    if stride == 0 {
        return Err(Error::invalid("record stride must be >= 1"));
    }
    if !rho0.is_density(1e-12) {
        return Err(Error::domain("initial data must take values in [0, 1]"));
    }
    let mesh = rho0.mesh;
    if mesh.d != params.d {
        return Err(Error::shape("mesh and parameters disagree on dimension"));
    }
    let bound = cfl_bound(params, &mesh);
    let dt_req = match dt {
        Some(v) => {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("time step must be positive"));
            }
            if v > bound * (1.0 + 1e-12) {
                return Err(Error::CflViolation { dt: v, bound });
            }
            v
        }
        None => monotone_dt(params, &mesh),
    };
    let mut steps = (t_end / dt_req).ceil() as usize;
    steps = steps.max(1);
    steps = steps.div_ceil(stride) * stride;
    let dt_used = t_end / steps as f64;

    let boundary = b.sample_mesh(&mesh);
    let phi_faces = boundary.map(|v| phi(params, v));
    let n = mesh.node_count();
    let mut rho = rho0.values.clone();
    let mut phi_buf = vec![0.0; n];
    let mut lap = vec![0.0; n];
    let mut frames = Vec::with_capacity(steps / stride + 1);
    frames.push(rho.clone());
    let mut clip_mass = 0.0;
    for s in 1..=steps {
        clip_mass += euler_step(&mesh, params, &mut rho, &mut phi_buf, &mut lap, &phi_faces, dt_used);
        if s % stride == 0 {
            frames.push(rho.clone());
        }
    }
    let trajectory = Trajectory::new(mesh, dt_used * stride as f64, frames, boundary)?;
    Ok(ParabolicRun {
        trajectory,
        clip_mass,
        steps,
        dt_used,
    })
}

/// Relaxation toward the stationary profile with an early stop: integrates
/// until the recorded frame is within `tol` of `rho_bar` in L2, or until
/// `t_cap`. Frames are recorded every `stride` steps.
pub fn relax_to_stationary(
    rho0: &DensityField,
    b: &BoundaryProfile,
    params: &ModelParams,
    rho_bar: &DensityField,
    tol: f64,
    t_cap: f64,
    stride: usize,
) -> Result<ParabolicRun> {
    b.validate()?;
    if rho0.mesh != rho_bar.mesh {
        return Err(Error::shape("initial and stationary fields on different meshes"));
    }
    if !rho0.is_density(1e-12) {
        return Err(Error::domain("initial data must take values in [0, 1]"));
    }
    let mesh = rho0.mesh;
    let dt_used = monotone_dt(params, &mesh);
    if stride == 0 {
        return Err(Error::invalid("record stride must be >= 1"));
    }
    // whole record blocks keep the frame spacing uniform at the cap
    let blocks = (t_cap / dt_used / stride as f64).ceil().max(1.0) as usize;
    let max_steps = blocks * stride;
    let boundary = b.sample_mesh(&mesh);
    let phi_faces = boundary.map(|v| phi(params, v));
    let n = mesh.node_count();
    let mut rho = rho0.values.clone();
    let mut phi_buf = vec![0.0; n];
    let mut lap = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let mut frames = vec![rho.clone()];
    let mut clip_mass = 0.0;
    let mut steps = 0;
    loop {
        for _ in 0..stride {
            if steps >= max_steps {
                break;
            }
            clip_mass +=
                euler_step(&mesh, params, &mut rho, &mut phi_buf, &mut lap, &phi_faces, dt_used);
            steps += 1;
        }
        frames.push(rho.clone());
        for i in 0..n {
            diff[i] = rho[i] - rho_bar.values[i];
        }
        if mesh.l2_norm(&diff) < tol || steps >= max_steps {
            break;
        }
    }
    let trajectory = Trajectory::new(mesh, dt_used * stride as f64, frames, boundary)?;
    Ok(ParabolicRun {
        trajectory,
        clip_mass,
        steps,
        dt_used,
    })
}
