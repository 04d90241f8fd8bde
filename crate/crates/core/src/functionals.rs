//! Macroscopic functionals of density trajectories: the quadratic energy,
//! the dissipation integral, the linear-quadratic pairing against a test
//! field, the dynamical cost functional, and the relative free energy.
//!
//! The cost functional is a supremum over test fields of a concave
//! quadratic, so it is evaluated exactly by one weighted elliptic solve per
//! time slice (the stationary point is the global maximum). Time derivatives
//! are backward differences at slices `1..=N` paired with right-endpoint
//! time quadrature; together with edge-midpoint mobilities this makes the
//! pairing evaluation at the optimizer, and the reversal inequality against
//! the dissipation of the forward path, identities up to rounding rather
//! than up to discretization error.

use serde::{Deserialize, Serialize};

use crate::mesh::{DensityField, Mesh, Trajectory};
use crate::operators::{
    dot_volume, edge_bilinear, edge_densities, laplacian, node_gradient_sq, wall_surface_pairing,
    zero_faces, EdgeWeights,
};
use crate::solver::solve_weighted_poisson;
use crate::transport::{chi, phi, sigma};
use crate::{Error, ModelParams, Result};

/// Lower clip for degenerate edge weights (mobility vanishes at 0 and 1).
pub const WEIGHT_CLIP: f64 = 1e-10;

/// Internal-consistency slack: slice costs may round this far below zero.
pub const SLICE_SLACK: f64 = 1e-10;

/// Space-time test field on a trajectory's grid, treated as vanishing on
/// the Dirichlet faces by every operator applied to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub mesh: Mesh,
    pub dt: f64,
    pub frames: Vec<Vec<f64>>,
}

impl TestField {
    pub fn new(mesh: Mesh, dt: f64, frames: Vec<Vec<f64>>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::invalid("a test field needs at least two frames"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("frame spacing must be positive"));
        }
        if frames.iter().any(|f| f.len() != mesh.node_count()) {
            return Err(Error::shape("test field frame has wrong node count"));
        }
        Ok(TestField { mesh, dt, frames })
    }

    pub fn zeros(mesh: Mesh, dt: f64, frame_count: usize) -> Result<Self> {
        TestField::new(mesh, dt, vec![vec![0.0; mesh.node_count()]; frame_count])
    }

    /// Shares the space-time grid of `traj`.
    pub fn matches(&self, traj: &Trajectory) -> Result<()> {
        if self.mesh != traj.mesh {
            return Err(Error::shape("test field and trajectory on different meshes"));
        }
        if self.frames.len() != traj.frames.len() {
            return Err(Error::shape("test field and trajectory have different frame counts"));
        }
        if (self.dt - traj.dt).abs() > 1e-12 * traj.dt.max(1.0) {
            return Err(Error::shape("test field and trajectory have different frame spacing"));
        }
        Ok(())
    }
}

/// Quadratic energy of a trajectory: time integral of the squared spatial
/// gradient (centered interiorly, one-sided at the wall layers), trapezoid
/// rule in time.
pub fn energy_qt(traj: &Trajectory) -> f64 {
    let mesh = &traj.mesh;
    let vol = mesh.cell_volume();
    let n = traj.frames.len() - 1;
    let mut total = 0.0;
    for (m, frame) in traj.frames.iter().enumerate() {
        let grad = node_gradient_sq(mesh, frame);
        let slice: f64 = grad.iter().sum::<f64>() * vol;
        let weight = if m == 0 || m == n { 0.5 } else { 1.0 };
        total += weight * slice;
    }
    total * traj.dt
}

/// Dissipation of a trajectory with its diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DissipationReport {
    pub value: f64,
    /// Number of edge-slice pairs whose mobility was clipped (the path
    /// touches the degenerate densities 0 or 1 there).
    pub clipped: usize,
}

/// Dissipation integral: squared edge gradients weighted by the inverse
/// mobility at the edge midpoint densities, left-endpoint rule in time.
///
/// Wall edges measure the gradient against the pinned reservoir trace, so
/// paths whose wall values do not approach the reservoir densities are
/// charged accordingly; mobilities are clipped below at [`WEIGHT_CLIP`].
pub fn dissipation_et(traj: &Trajectory) -> DissipationReport {
    let mesh = &traj.mesh;
    let n = traj.frames.len() - 1;
    let mut value = 0.0;
    let mut clipped = 0;
    for frame in traj.frames.iter().take(n) {
        let r = edge_densities(mesh, frame, &traj.boundary);
        let weights = r.map(|x| 1.0 / chi(x).max(WEIGHT_CLIP));
        clipped += count_chi_clips(&r);
        value += traj.dt
            * edge_bilinear(mesh, &weights, frame, &traj.boundary, frame, &traj.boundary);
    }
    DissipationReport { value, clipped }
}

fn count_chi_clips(r: &EdgeWeights) -> usize {
    let mut clips = r.dir0.iter().filter(|&&x| chi(x) < WEIGHT_CLIP).count();
    for dim in &r.trans {
        clips += dim.iter().filter(|&&x| chi(x) < WEIGHT_CLIP).count();
    }
    clips
}

/// Evaluation of every functional on one trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub qt: f64,
    pub et: f64,
    pub et_clipped: usize,
    pub it: f64,
    /// Cost of slice `n` (multiply by the frame spacing and sum to get
    /// `it`).
    pub per_slice: Vec<f64>,
    /// Relative residual of each slice's weighted elliptic solve.
    pub solver_residuals: Vec<f64>,
}

/// Cost functional result: the report plus the per-slice optimizing test
/// field (frame 0 is zero by convention; the pairing does not read it).
#[derive(Debug, Clone)]
pub struct RateEvaluation {
    pub report: FunctionalReport,
    pub optimizer: TestField,
}

/// Edge mobilities of a frame, clipped below at [`WEIGHT_CLIP`].
pub fn mobility_weights(
    mesh: &Mesh,
    params: &ModelParams,
    frame: &[f64],
    faces: &crate::boundary::FaceValues,
) -> EdgeWeights {
    edge_densities(mesh, frame, faces).map(|r| sigma(params, r).max(WEIGHT_CLIP))
}

/// Dynamical cost of a trajectory by per-slice variational solves.
///
/// Slice `n` (backward difference over `(t_{n-1}, t_n]`) forms the excess
/// `f_n = (rho_n - rho_{n-1})/dt - lap phi(rho_n)`, solves the mobility-
/// weighted Poisson problem for the optimizing field and charges half the
/// pairing of `f_n` with it; the total is the frame-spacing-weighted sum.
pub fn rate_functional_it(traj: &Trajectory, params: &ModelParams) -> Result<RateEvaluation> {
    let mesh = &traj.mesh;
    if mesh.d != params.d {
        return Err(Error::shape("mesh and parameters disagree on dimension"));
    }
    let n_nodes = mesh.node_count();
    let slices = traj.frames.len() - 1;
    let phi_faces = traj.boundary.map(|v| phi(params, v));
    let mut per_slice = Vec::with_capacity(slices);
    let mut solver_residuals = Vec::with_capacity(slices);
    let mut optimizer = vec![vec![0.0; n_nodes]];
    let mut phi_buf = vec![0.0; n_nodes];
    let mut lap = vec![0.0; n_nodes];
    let mut f = vec![0.0; n_nodes];
    let mut residual = vec![0.0; n_nodes];

    for n in 1..=slices {
        let rho = &traj.frames[n];
        let prev = &traj.frames[n - 1];
        for (w, &r) in phi_buf.iter_mut().zip(rho.iter()) {
            *w = phi(params, r);
        }
        laplacian(mesh, &phi_buf, &phi_faces, &mut lap);
        for i in 0..n_nodes {
            f[i] = (rho[i] - prev[i]) / traj.dt - lap[i];
        }
        let weights = mobility_weights(mesh, params, rho, &traj.boundary);
        let g = solve_weighted_poisson(mesh, &weights, &f).map_err(|e| {
            Error::SolverFailure(format!("slice {n}: {e}"))
        })?;
        let cost = 0.5 * dot_volume(mesh, &f, &g);
        if cost < -SLICE_SLACK {
            return Err(Error::SolverFailure(format!(
                "slice {n}: negative cost {cost:.3e} breaks internal consistency"
            )));
        }
        crate::operators::weighted_laplacian(mesh, &weights, &g, &zero_faces(mesh), &mut residual);
        for i in 0..n_nodes {
            residual[i] += f[i];
        }
        let scale = mesh.l2_norm(&f).max(1e-30);
        solver_residuals.push(mesh.l2_norm(&residual) / scale);
        per_slice.push(cost);
        optimizer.push(g);
    }
    let it = traj.dt * per_slice.iter().sum::<f64>();
    let et = dissipation_et(traj);
    let report = FunctionalReport {
        qt: energy_qt(traj),
        et: et.value,
        et_clipped: et.clipped,
        it,
        per_slice,
        solver_residuals,
    };
    let optimizer = TestField::new(*mesh, traj.dt, optimizer)?;
    Ok(RateEvaluation { report, optimizer })
}

/// Linear-quadratic pairing of a trajectory with a test field: endpoint
/// pairings, minus the time-difference pairing, minus the pairing of the
/// flux with the field's Laplacian, plus the wall surface terms carrying
/// the reservoir flux values, minus half the mobility-weighted field
/// energy. Bounded above by the dynamical cost for every test field, with
/// equality at the per-slice optimizer.
pub fn evaluate_jg(traj: &Trajectory, g: &TestField, params: &ModelParams) -> Result<f64> {
    g.matches(traj)?;
    let mesh = &traj.mesh;
    let n_nodes = mesh.node_count();
    let slices = traj.frames.len() - 1;
    let zero = zero_faces(mesh);
    let phi_faces = traj.boundary.map(|v| phi(params, v));

    let mut value = dot_volume(mesh, &traj.frames[slices], &g.frames[slices])
        - dot_volume(mesh, &traj.frames[0], &g.frames[0]);
    let mut diff = vec![0.0; n_nodes];
    for n in 0..slices {
        for i in 0..n_nodes {
            diff[i] = g.frames[n + 1][i] - g.frames[n][i];
        }
        value -= dot_volume(mesh, &traj.frames[n], &diff);
    }
    let mut phi_buf = vec![0.0; n_nodes];
    let mut lap_g = vec![0.0; n_nodes];
    for n in 1..=slices {
        let rho = &traj.frames[n];
        let gn = &g.frames[n];
        for (w, &r) in phi_buf.iter_mut().zip(rho.iter()) {
            *w = phi(params, r);
        }
        laplacian(mesh, gn, &zero, &mut lap_g);
        value -= traj.dt * dot_volume(mesh, &phi_buf, &lap_g);
        value += traj.dt * wall_surface_pairing(mesh, &phi_faces, gn);
        let weights = mobility_weights(mesh, params, rho, &traj.boundary);
        value -= 0.5 * traj.dt * edge_bilinear(mesh, &weights, gn, &zero, gn, &zero);
    }
    Ok(value)
}

/// Pointwise relative entropy density `h(x, y)` with the `0 log 0 = 0`
/// convention; finite for `x` in `[0, 1]`, `y` in `(0, 1)`.
pub fn entropy_density(x: f64, y: f64) -> f64 {
    let first = if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    let second = if x == 1.0 {
        0.0
    } else {
        (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln()
    };
    first + second
}

/// Relative free energy of `rho` with respect to `reference`: the cell
/// quadrature of the relative entropy density.
pub fn relative_free_energy(rho: &DensityField, reference: &DensityField) -> Result<f64> {
    if rho.mesh != reference.mesh {
        return Err(Error::shape("fields on different meshes"));
    }
    if !rho.is_density(1e-12) {
        return Err(Error::domain("density must take values in [0, 1]"));
    }
    if reference
        .values
        .iter()
        .any(|&y| !(y > 0.0 && y < 1.0))
    {
        return Err(Error::domain("reference profile must lie strictly inside (0, 1)"));
    }
    let vol = rho.mesh.cell_volume();
    let mut total = 0.0;
    for (&x, &y) in rho.values.iter().zip(&reference.values) {
        total += entropy_density(x.clamp(0.0, 1.0), y);
    }
    Ok(total * vol)
}

/// `index`-th member of the deterministic cosine dictionary: multi-indices
/// `(j, m_1, ..)` enumerated by increasing total order (index 0 is the
/// constant function 1), slab factor `cos(j pi (u1+1)/2)`, periodic factors
/// `cos(2 pi m_k u_k)`. All members have supremum norm 1.
pub fn dictionary_field(mesh: &Mesh, index: usize) -> Vec<f64> {
    let exponents = multi_index(mesh.d, index);
    let mut values = vec![0.0; mesh.node_count()];
    let mut u = vec![0.0; mesh.d];
    for (i, slot) in values.iter_mut().enumerate() {
        mesh.node_coords(i, &mut u);
        let mut v = (exponents[0] as f64 * std::f64::consts::PI * (u[0] + 1.0) / 2.0).cos();
        for k in 1..mesh.d {
            v *= (2.0 * std::f64::consts::PI * exponents[k] as f64 * u[k]).cos();
        }
        *slot = v;
    }
    values
}

/// `index`-th multi-index of dimension `dim` in the order: total sum
/// ascending, then lexicographic.
fn multi_index(dim: usize, index: usize) -> Vec<usize> {
    let mut remaining = index;
    let mut total = 0usize;
    loop {
        let count = compositions(total, dim);
        if remaining < count {
            return nth_composition(total, dim, remaining);
        }
        remaining -= count;
        total += 1;
    }
}

/// Number of ways to write `total` as an ordered sum of `dim` nonnegative
/// integers.
fn compositions(total: usize, dim: usize) -> usize {
    // binomial(total + dim - 1, dim - 1)
    let mut value = 1usize;
    for i in 0..dim - 1 {
        value = value * (total + i + 1) / (i + 1);
    }
    value
}

fn nth_composition(total: usize, dim: usize, mut rank: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(dim);
    let mut left = total;
    for pos in 0..dim {
        if pos == dim - 1 {
            out.push(left);
            break;
        }
        // first coordinate descends from `left` in lexicographic order? No:
        // ascending lexicographic puts smaller leading entries first.
        let mut first = 0usize;
        loop {
            let tail = compositions(left - first, dim - pos - 1);
            if rank < tail {
                break;
            }
            rank -= tail;
            first += 1;
        }
        out.push(first);
        left -= first;
    }
    out
}

/// Weak-topology distance through the first `modes` dictionary members:
/// geometrically weighted absolute pairing differences.
pub fn measure_distance(rho1: &DensityField, rho2: &DensityField, modes: usize) -> Result<f64> {
    if rho1.mesh != rho2.mesh {
        return Err(Error::shape("fields on different meshes"));
    }
    let mesh = &rho1.mesh;
    let diff: Vec<f64> = rho1
        .values
        .iter()
        .zip(&rho2.values)
        .map(|(a, b)| a - b)
        .collect();
    let mut total = 0.0;
    let mut weight = 0.5;
    for k in 0..modes {
        let f = dictionary_field(mesh, k);
        total += weight * dot_volume(mesh, &diff, &f).abs();
        weight *= 0.5;
    }
    Ok(total)
}

/// Random test field: a few dictionary modes with random amplitudes, each
/// modulated by a random smooth time envelope.
pub fn random_test_field(
    mesh: &Mesh,
    dt: f64,
    frame_count: usize,
    amplitude: f64,
    rng: &mut impl rand::Rng,
) -> Result<TestField> {
    let mut frames = vec![vec![0.0; mesh.node_count()]; frame_count];
    let horizon = dt * (frame_count - 1) as f64;
    for _ in 0..3 {
        let mode = dictionary_field(mesh, rng.gen_range(0..8));
        let coeff: f64 = rng.gen_range(-amplitude..amplitude);
        let omega: f64 = rng.gen_range(0.0..2.0) * std::f64::consts::PI / horizon.max(1e-12);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        for (n, frame) in frames.iter_mut().enumerate() {
            let envelope = coeff * (omega * (n as f64 * dt) + phase).cos();
            for (slot, &m) in frame.iter_mut().zip(&mode) {
                *slot += envelope * m;
            }
        }
    }
    TestField::new(*mesh, dt, frames)
}
