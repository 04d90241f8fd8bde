//! The six experiment runners. Each produces its artifact files in memory
//! plus a stream-derivation record for the manifest; all sampling descends
//! from the single config seed through the streams documented here.

use std::collections::BTreeMap;

use bdex_core::boundary::{BoundaryProfile, Face};
use bdex_core::functionals::{
    dictionary_field, evaluate_jg, dissipation_et, random_test_field, rate_functional_it,
    relative_free_energy, FunctionalReport,
};
use bdex_core::kmc::{
    occupation_histogram, replica_state_counts, site_average_profile,
    stationary_profile_experiment, RngSpec, StationaryRunSpec,
};
use bdex_core::lattice::{Configuration, LatticeGeometry};
use bdex_core::mesh::{DensityField, Mesh};
use bdex_core::oracle::{chi_square_p_value, total_variation, ExactChain};
use bdex_core::params::ModelParams;
use bdex_core::pde::{solve_elliptic, solve_parabolic, solve_parabolic_strided};
use bdex_core::quasipotential::{
    interpolation_path, quasipotential_upper_interpolation, quasipotential_upper_reversal,
    trace_mismatch, ReversalEstimate, Schedule, UpperBoundEstimate,
};
use bdex_core::transport::{phi, phi_inverse};
use rand::Rng;
use serde::Serialize;

use crate::config::{Experiment, PathSpec, Spec};
use crate::output;
use crate::parallel::parallel_map;

/// Everything a run leaves behind, before any of it touches the disk.
pub struct RunArtifacts {
    /// File name (relative to the output dir) and content, in write order.
    pub files: Vec<(String, Vec<u8>)>,
    /// Stream derivation record for the manifest.
    pub streams: BTreeMap<String, String>,
    /// Names of failed suite checks; empty for every other experiment.
    pub failures: Vec<String>,
    /// One-line result for stdout.
    pub summary: String,
}

impl RunArtifacts {
    fn new(summary: String) -> Self {
        RunArtifacts {
            files: Vec::new(),
            streams: BTreeMap::new(),
            failures: Vec::new(),
            summary,
        }
    }

    fn file(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
    }
}

pub fn execute(exp: &Experiment, jobs: usize) -> bdex_core::Result<RunArtifacts> {
    match &exp.spec {
        Spec::Hydrostatics {
            params,
            boundary,
            mesh,
            burn_in,
            run_time,
            batches,
            samples_per_batch,
            replicas,
        } => run_hydrostatics(
            exp.seed,
            jobs,
            params,
            boundary,
            *mesh,
            *burn_in,
            *run_time,
            *batches,
            *samples_per_batch,
            *replicas,
        ),
        Spec::Hydrodynamics { params, boundary, mesh, initial, t_end, dt, stride } => {
            let rho0 = initial.realize(mesh, boundary, params)?;
            run_hydrodynamics(params, boundary, &rho0, *t_end, *dt, *stride)
        }
        Spec::RateFunctional { params, boundary, mesh, path } => {
            run_rate_functional(params, boundary, mesh, path)
        }
        Spec::Quasipotential { params, boundary, mesh, target, interpolation, reversal } => {
            let rho_bar = solve_elliptic(boundary, params, mesh)?;
            let target = target.realize(mesh, boundary, params)?;
            run_quasipotential(params, boundary, &rho_bar, &target, interpolation, reversal)
        }
        Spec::OracleValidate { params, boundary, burn_in, run_time, transient_time, replicas } => {
            run_oracle_validate(
                exp.seed,
                jobs,
                params,
                boundary,
                *burn_in,
                *run_time,
                *transient_time,
                *replicas,
            )
        }
        Spec::LemmaSuite { params, boundary, mesh } => {
            run_lemma_suite(exp.seed, jobs, params, boundary, mesh)
        }
    }
}

#[derive(Serialize)]
struct HydrostaticsReport {
    a: f64,
    d: usize,
    n: usize,
    m1: usize,
    mt: usize,
    replicas: usize,
    batches_per_replica: usize,
    samples_per_replica: usize,
    cells: usize,
    l1_distance: f64,
    max_abs_z: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_hydrostatics(
    seed: u64,
    jobs: usize,
    params: &ModelParams,
    boundary: &BoundaryProfile,
    mesh: Mesh,
    burn_in: f64,
    run_time: f64,
    batches: usize,
    samples_per_batch: usize,
    replicas: usize,
) -> bdex_core::Result<RunArtifacts> {
    let spec = StationaryRunSpec { mesh, burn_in, run_time, batches, samples_per_batch };
    let results = parallel_map(jobs, replicas, |r| {
        stationary_profile_experiment(params, boundary, &spec, RngSpec::new(seed, r as u64))
    });
    let mut estimates = Vec::with_capacity(replicas);
    for r in results {
        estimates.push(r?);
    }

    let cells = mesh.node_count();
    let mut mean = vec![0.0; cells];
    let mut se = vec![0.0; cells];
    for est in &estimates {
        for c in 0..cells {
            mean[c] += est.mean.values[c];
            se[c] += est.standard_error[c] * est.standard_error[c];
        }
    }
    let r = replicas as f64;
    for c in 0..cells {
        mean[c] /= r;
        se[c] = se[c].sqrt() / r;
    }

    let target = hydrostatic_target(params, boundary, &mesh)?;
    let z: Vec<f64> = (0..cells)
        .map(|c| (mean[c] - target.values[c]) / se[c].max(1e-12))
        .collect();
    let mean_field = DensityField::new(mesh, mean.clone())?;
    let l1_distance = mean_field.l1_distance(&target)?;
    let max_abs_z = z.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));

    let mut arts = RunArtifacts::new(format!(
        "hydrostatics: L1 distance to the stationary profile {l1_distance:.6}, max |z| {max_abs_z:.3} over {cells} cells"
    ));
    arts.streams.insert(
        "replicas".to_string(),
        format!("seed {seed}, one stream per replica: 0..{replicas}"),
    );
    arts.file(
        "profile.csv",
        output::field_table_csv(
            &mesh,
            &[
                ("empirical", &mean),
                ("standard_error", &se),
                ("target", &target.values),
                ("z", &z),
            ],
        ),
    );
    arts.json(
        "hydrostatics.json",
        &HydrostaticsReport {
            a: params.a,
            d: params.d,
            n: params.n,
            m1: mesh.m1,
            mt: mesh.mt,
            replicas,
            batches_per_replica: batches,
            samples_per_replica: batches * samples_per_batch,
            cells,
            l1_distance,
            max_abs_z,
        },
    );
    Ok(arts)
}

/// Stationary profile seen through the same site binning as the empirical
/// estimate, so edge cells with fewer sites are biased identically on both
/// sides of the comparison. Transversally constant reservoirs admit a
/// closed form (the flux potential is affine across the slab); tabulated
/// data falls back to interpolating the finite-volume solve.
fn hydrostatic_target(
    params: &ModelParams,
    boundary: &BoundaryProfile,
    mesh: &Mesh,
) -> bdex_core::Result<DensityField> {
    let geom = LatticeGeometry::new(params);
    match boundary {
        BoundaryProfile::Tabulated { .. } if params.d >= 2 => {
            let coarse = solve_elliptic(boundary, params, mesh)?;
            site_average_profile(&geom, mesh, |u1, ut| {
                interpolate_field(&coarse, boundary, u1, ut)
            })
        }
        _ => {
            let wl = phi(params, boundary.value(Face::Left, &[]));
            let wr = phi(params, boundary.value(Face::Right, &[]));
            site_average_profile(&geom, mesh, |u1, _| {
                let w = 0.5 * (wl + wr) + 0.5 * u1 * (wr - wl);
                phi_inverse(params, w).expect("affine flux data inverts inside (0, 1)")
            })
        }
    }
}

/// Pointwise read of a cell-midpoint field: linear along the wall
/// coordinate with the reservoir value at the walls, periodic linear in
/// every transverse direction.
fn interpolate_field(field: &DensityField, boundary: &BoundaryProfile, u1: f64, ut: &[f64]) -> f64 {
    let mesh = field.mesh;
    let mt = mesh.mt;
    let column = |i1: usize| -> f64 {
        let mut acc = 0.0;
        for corner in 0..(1usize << (mesh.d - 1)) {
            let mut t = 0usize;
            let mut weight = 1.0;
            for (k, &w) in ut.iter().enumerate() {
                let x = w.rem_euclid(1.0) * mt as f64 - 0.5;
                let frac = x - x.floor();
                let lo = (x.floor() as i64).rem_euclid(mt as i64) as usize;
                let (cell, wgt) = if (corner >> k) & 1 == 1 {
                    ((lo + 1) % mt, frac)
                } else {
                    (lo, 1.0 - frac)
                };
                t = t * mt + cell;
                weight *= wgt;
            }
            acc += weight * field.values[mesh.node_index(i1, t)];
        }
        acc
    };
    let h = mesh.h(0);
    let x = (u1 + 1.0) / h - 0.5;
    if x <= 0.0 {
        let s = ((u1 + 1.0) / (0.5 * h)).clamp(0.0, 1.0);
        (1.0 - s) * boundary.value(Face::Left, ut) + s * column(0)
    } else if x >= (mesh.m1 - 1) as f64 {
        let s = ((1.0 - u1) / (0.5 * h)).clamp(0.0, 1.0);
        (1.0 - s) * boundary.value(Face::Right, ut) + s * column(mesh.m1 - 1)
    } else {
        let k = x.floor() as usize;
        (1.0 - (x - k as f64)) * column(k) + (x - k as f64) * column(k + 1)
    }
}

#[derive(Serialize)]
struct HydrodynamicsReport {
    a: f64,
    d: usize,
    n: usize,
    m1: usize,
    mt: usize,
    t_end: f64,
    dt_used: f64,
    stride: usize,
    steps: usize,
    frames: usize,
    clip_mass: f64,
    /// L1 gap between the final frame and the stationary profile.
    stationary_gap: f64,
}

fn run_hydrodynamics(
    params: &ModelParams,
    boundary: &BoundaryProfile,
    rho0: &DensityField,
    t_end: f64,
    dt: Option<f64>,
    stride: usize,
) -> bdex_core::Result<RunArtifacts> {
    let run = solve_parabolic_strided(rho0, boundary, params, t_end, dt, stride)?;
    let rho_bar = solve_elliptic(boundary, params, &rho0.mesh)?;
    let last = run.trajectory.frames.len() - 1;
    let stationary_gap = run.trajectory.frame_field(last).l1_distance(&rho_bar)?;

    let mut arts = RunArtifacts::new(format!(
        "hydrodynamics: {} steps at dt {:.3e}, {} frames recorded, clipped mass {:.2e}, stationary gap {:.4e}",
        run.steps,
        run.dt_used,
        run.trajectory.frames.len(),
        run.clip_mass,
        stationary_gap
    ));
    arts.file("trajectory.csv", output::trajectory_csv(&run.trajectory));
    arts.json(
        "hydrodynamics.json",
        &HydrodynamicsReport {
            a: params.a,
            d: params.d,
            n: params.n,
            m1: rho0.mesh.m1,
            mt: rho0.mesh.mt,
            t_end,
            dt_used: run.dt_used,
            stride,
            steps: run.steps,
            frames: run.trajectory.frames.len(),
            clip_mass: run.clip_mass,
            stationary_gap,
        },
    );
    Ok(arts)
}

#[derive(Serialize)]
struct RateFunctionalArtifact {
    path_kind: &'static str,
    t_end: f64,
    dt: f64,
    frames: usize,
    report: FunctionalReport,
}

fn run_rate_functional(
    params: &ModelParams,
    boundary: &BoundaryProfile,
    mesh: &Mesh,
    path: &PathSpec,
) -> bdex_core::Result<RunArtifacts> {
    let (traj, path_kind) = match path {
        PathSpec::Solution { initial, t_end, dt, stride } => {
            let rho0 = initial.realize(mesh, boundary, params)?;
            let run = solve_parabolic_strided(&rho0, boundary, params, *t_end, *dt, *stride)?;
            (run.trajectory, "solution")
        }
        PathSpec::Interpolation { from, to, power, frames } => {
            let from = from.realize(mesh, boundary, params)?;
            let to = to.realize(mesh, boundary, params)?;
            let faces = boundary.sample_mesh(mesh);
            let path =
                interpolation_path(&from, &to, faces, &Schedule::Power { p: *power }, *frames)?;
            (path, "interpolation")
        }
    };
    let eval = rate_functional_it(&traj, params)?;
    let report = eval.report;

    let mut arts = RunArtifacts::new(format!(
        "rate functional: IT {:.6e} over {} slices (QT {:.4}, ET {:.4})",
        report.it,
        report.per_slice.len(),
        report.qt,
        report.et
    ));
    arts.file(
        "per_slice.csv",
        output::per_slice_csv(traj.dt, &report.per_slice, &report.solver_residuals),
    );
    arts.json(
        "functionals.json",
        &RateFunctionalArtifact {
            path_kind,
            t_end: traj.total_time(),
            dt: traj.dt,
            frames: traj.frames.len(),
            report,
        },
    );
    Ok(arts)
}

#[derive(Serialize)]
struct QuasipotentialReport {
    /// Envelope of the two upper bounds.
    value: f64,
    interpolation: UpperBoundEstimate,
    reversal: ReversalEstimate,
}

fn run_quasipotential(
    params: &ModelParams,
    boundary: &BoundaryProfile,
    rho_bar: &DensityField,
    target: &DensityField,
    interpolation: &bdex_core::quasipotential::InterpolationOptions,
    reversal: &bdex_core::quasipotential::ReversalOptions,
) -> bdex_core::Result<RunArtifacts> {
    let interp = quasipotential_upper_interpolation(rho_bar, target, boundary, params, interpolation)?;
    let rev = quasipotential_upper_reversal(target, boundary, params, Some(rho_bar), reversal)?;
    let value = interp.value.min(rev.value);

    let mut arts = RunArtifacts::new(format!(
        "quasi-potential upper bound {value:.6} (interpolation {:.6}, reversal {:.6})",
        interp.value, rev.value
    ));
    arts.file(
        "target_profile.csv",
        output::field_table_csv(
            &target.mesh,
            &[("target", &target.values), ("stationary", &rho_bar.values)],
        ),
    );
    let dt = 1.0 / (interp.frames - 1) as f64;
    arts.file(
        "per_slice.csv",
        output::per_slice_csv(dt, &interp.report.per_slice, &interp.report.solver_residuals),
    );
    arts.json(
        "quasipotential.json",
        &QuasipotentialReport { value, interpolation: interp, reversal: rev },
    );
    Ok(arts)
}

#[derive(Serialize)]
struct OracleReport {
    sites: usize,
    states: usize,
    run_time: f64,
    tv_distance: f64,
    transient_time: f64,
    replicas: usize,
    chi_square_p: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_oracle_validate(
    seed: u64,
    jobs: usize,
    params: &ModelParams,
    boundary: &BoundaryProfile,
    burn_in: f64,
    run_time: f64,
    transient_time: f64,
    replicas: usize,
) -> bdex_core::Result<RunArtifacts> {
    let chain = ExactChain::new(params, boundary)?;
    let exact = chain.stationary_distribution()?;
    let hist = occupation_histogram(params, boundary, burn_in, run_time, RngSpec::new(seed, 0))?;
    let tv_distance = total_variation(&hist, &exact);

    let geom = LatticeGeometry::new(params);
    let initial = Configuration::empty(&geom);
    let mut p0 = vec![0.0; chain.state_count()];
    p0[initial.state_code()? as usize] = 1.0;
    let law = chain.transient_distribution(&p0, transient_time)?;

    // Replica k always draws from stream 1 + k, however the chunks fall.
    let chunk = replicas.div_ceil(jobs.max(1));
    let chunks = replicas.div_ceil(chunk);
    let partials = parallel_map(jobs, chunks, |c| {
        let lo = c * chunk;
        let hi = ((c + 1) * chunk).min(replicas);
        replica_state_counts(
            params,
            boundary,
            &initial,
            transient_time,
            hi - lo,
            RngSpec::new(seed, 1 + lo as u64),
        )
    });
    let mut counts = vec![0u64; chain.state_count()];
    for part in partials {
        for (slot, v) in counts.iter_mut().zip(part?) {
            *slot += v;
        }
    }
    let chi_square_p = chi_square_p_value(&counts, &law)?;
    let expected: Vec<f64> = law.iter().map(|q| q * replicas as f64).collect();

    let mut arts = RunArtifacts::new(format!(
        "oracle: stationary TV {tv_distance:.4}, transient chi-square p {chi_square_p:.3} over {replicas} replicas"
    ));
    arts.streams.insert("occupation histogram".to_string(), format!("seed {seed}, stream 0"));
    arts.streams.insert(
        "transient replicas".to_string(),
        format!("seed {seed}, stream 1 + k for replica k in 0..{replicas}"),
    );
    arts.file("histogram.csv", output::histogram_csv(&exact, &hist));
    arts.file("transient.csv", output::transient_csv(&law, &expected, &counts));
    arts.json(
        "oracle.json",
        &OracleReport {
            sites: chain.sites(),
            states: chain.state_count(),
            run_time,
            tv_distance,
            transient_time,
            replicas,
            chi_square_p,
        },
    );
    Ok(arts)
}

/// Result of one suite check.
#[derive(Serialize, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Serialize)]
struct LemmaReport {
    total: usize,
    passed: usize,
    checks: Vec<CheckOutcome>,
}

const CHECK_NAMES: [&str; 11] = [
    "rate-positivity",
    "generator-conservation",
    "stationary-null-vector",
    "l1-contraction",
    "comparison-principle",
    "confinement",
    "optimizer-pairing",
    "field-dominance",
    "reversal-bound",
    "free-energy-minimum",
    "interpolation-endpoints",
];

fn run_lemma_suite(
    seed: u64,
    jobs: usize,
    params: &ModelParams,
    boundary: &BoundaryProfile,
    mesh: &Mesh,
) -> bdex_core::Result<RunArtifacts> {
    let outcomes = parallel_map(jobs, CHECK_NAMES.len(), |i| {
        let name = CHECK_NAMES[i];
        match run_check(i, seed, params, boundary, mesh) {
            Ok((pass, detail)) => CheckOutcome { name, pass, detail },
            Err(e) => CheckOutcome { name, pass: false, detail: e.to_string() },
        }
    });
    let passed = outcomes.iter().filter(|o| o.pass).count();
    let failures: Vec<String> =
        outcomes.iter().filter(|o| !o.pass).map(|o| o.name.to_string()).collect();

    let mut arts = RunArtifacts::new(format!(
        "lemma suite: {passed}/{} checks passed",
        outcomes.len()
    ));
    arts.streams.insert(
        "checks".to_string(),
        format!("seed {seed}, stream 100 + i for check i in 0..{}", CHECK_NAMES.len()),
    );
    arts.file("lemmas.csv", lemmas_csv(&outcomes));
    arts.json(
        "lemmas.json",
        &LemmaReport { total: outcomes.len(), passed, checks: outcomes },
    );
    arts.failures = failures;
    Ok(arts)
}

/// Smooth random density: a few low dictionary modes around 1/2, clamped.
fn random_density(mesh: &Mesh, rng: &mut impl Rng, lo: f64, hi: f64) -> DensityField {
    let modes: Vec<Vec<f64>> = (1..=3).map(|k| dictionary_field(mesh, k)).collect();
    let coeffs: [f64; 3] = [
        rng.gen_range(-0.25..0.25),
        rng.gen_range(-0.25..0.25),
        rng.gen_range(-0.25..0.25),
    ];
    let values = (0..mesh.node_count())
        .map(|i| {
            let mut v = 0.5;
            for (c, m) in coeffs.iter().zip(&modes) {
                v += c * m[i];
            }
            v.clamp(lo, hi)
        })
        .collect();
    DensityField::new(*mesh, values).expect("clamped values are densities")
}

fn run_check(
    i: usize,
    seed: u64,
    params: &ModelParams,
    boundary: &BoundaryProfile,
    mesh: &Mesh,
) -> bdex_core::Result<(bool, String)> {
    let mut rng = RngSpec::new(seed, 100 + i as u64).rng();
    match CHECK_NAMES[i] {
        "rate-positivity" => {
            let chain = ExactChain::new(params, boundary)?;
            let table = chain.catalog();
            let mut min_enabled = f64::INFINITY;
            for code in 0..chain.state_count() as u64 {
                let config = Configuration::from_state_code(chain.sites(), code)?;
                let mut total = 0.0;
                for e in 0..table.len() {
                    let rate = table.rate(e, &config);
                    if !(rate.is_finite() && rate >= 0.0) {
                        return Ok((false, format!("rate {rate} in state {code}")));
                    }
                    if rate > 0.0 {
                        min_enabled = min_enabled.min(rate);
                    }
                    total += rate;
                }
                if total <= 0.0 {
                    return Ok((false, format!("state {code} has no enabled event")));
                }
            }
            Ok((true, format!(
                "min enabled rate {min_enabled:.4} over {} states",
                chain.state_count()
            )))
        }
        "generator-conservation" => {
            let g = ExactChain::new(params, boundary)?.generator_matrix();
            let n = g.nrows();
            let mut max_col = 0.0_f64;
            let mut max_row = 0.0_f64;
            for j in 0..n {
                let (mut cs, mut rs) = (0.0, 0.0);
                for i in 0..n {
                    cs += g[(i, j)];
                    rs += g[(j, i)];
                }
                max_col = max_col.max(cs.abs());
                max_row = max_row.max(rs.abs());
            }
            let residual = max_col.min(max_row);
            Ok((residual < 1e-9, format!("probability-flux residual {residual:.2e}")))
        }
        "stationary-null-vector" => {
            let chain = ExactChain::new(params, boundary)?;
            let pi = chain.stationary_distribution()?;
            let g = chain.generator_matrix();
            let min = pi.iter().cloned().fold(f64::INFINITY, f64::min);
            let norm_gap = (pi.iter().sum::<f64>() - 1.0).abs();
            // rows of the generator index the departure state, so the
            // stationary vector annihilates it from the left
            let mut residual = 0.0_f64;
            for t in 0..pi.len() {
                let mut acc = 0.0;
                for (s, &w) in pi.iter().enumerate() {
                    acc += w * g[(s, t)];
                }
                residual = residual.max(acc.abs());
            }
            let pass = min >= -1e-12 && norm_gap < 1e-9 && residual < 1e-8;
            Ok((pass, format!(
                "min weight {min:.2e}, normalization gap {norm_gap:.1e}, generator residual {residual:.2e}"
            )))
        }
        "l1-contraction" => {
            let t = 0.05;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..5 {
                let f1 = random_density(mesh, &mut rng, 0.02, 0.98);
                let f2 = random_density(mesh, &mut rng, 0.02, 0.98);
                let r1 = solve_parabolic(&f1, boundary, params, t, None)?;
                let r2 = solve_parabolic(&f2, boundary, params, t, None)?;
                let frames = r1.trajectory.frames.len();
                let mut prev = r1.trajectory.frame_field(0).l1_distance(&r2.trajectory.frame_field(0))?;
                for n in 1..frames {
                    let d = r1.trajectory.frame_field(n).l1_distance(&r2.trajectory.frame_field(n))?;
                    worst = worst.max(d - prev);
                    prev = d;
                }
            }
            Ok((worst <= 1e-10, format!("max one-step distance growth {worst:.2e}")))
        }
        "comparison-principle" => {
            let t = 0.05;
            let f1 = random_density(mesh, &mut rng, 0.02, 0.98);
            let f2 = random_density(mesh, &mut rng, 0.02, 0.98);
            let pointwise = |pick: fn(f64, f64) -> f64| {
                let values = f1.values.iter().zip(&f2.values).map(|(&x, &y)| pick(x, y)).collect();
                DensityField::new(*mesh, values).expect("densities")
            };
            let lo = pointwise(f64::min);
            let hi = pointwise(f64::max);
            let rl = solve_parabolic(&lo, boundary, params, t, None)?;
            let rh = solve_parabolic(&hi, boundary, params, t, None)?;
            let mut margin = f64::INFINITY;
            for (fl, fh) in rl.trajectory.frames.iter().zip(&rh.trajectory.frames) {
                for (a, b) in fl.iter().zip(fh) {
                    margin = margin.min(b - a);
                }
            }
            Ok((margin >= -1e-10, format!("min ordering margin {margin:.2e}")))
        }
        "confinement" => {
            let t = 0.1;
            let from_zero = solve_parabolic(&DensityField::constant(*mesh, 0.0), boundary, params, t, None)?;
            let from_one = solve_parabolic(&DensityField::constant(*mesh, 1.0), boundary, params, t, None)?;
            let last = from_zero.trajectory.frames.len() - 1;
            let low = from_zero.trajectory.frames[last]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let high = from_one.trajectory.frames[last]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let margin = low.min(1.0 - high);
            Ok((margin > 0.0, format!("distance to the extremes after t = {t}: {margin:.3e}")))
        }
        "optimizer-pairing" => {
            let traj = random_segment(mesh, boundary, &mut rng)?;
            let eval = rate_functional_it(&traj, params)?;
            let jg = evaluate_jg(&traj, &eval.optimizer, params)?;
            let gap = (jg - eval.report.it).abs();
            let pass = gap <= 1e-8 * (1.0 + eval.report.it);
            Ok((pass, format!("pairing gap {gap:.2e} at IT {:.4e}", eval.report.it)))
        }
        "field-dominance" => {
            let traj = random_segment(mesh, boundary, &mut rng)?;
            let eval = rate_functional_it(&traj, params)?;
            let mut max_excess = f64::NEG_INFINITY;
            for _ in 0..30 {
                let g = random_test_field(mesh, traj.dt, traj.frames.len(), 0.5, &mut rng)?;
                let jg = evaluate_jg(&traj, &g, params)?;
                max_excess = max_excess.max(jg - eval.report.it);
            }
            let pass = max_excess <= 1e-9 * (1.0 + eval.report.it);
            Ok((pass, format!("max pairing excess over the supremum {max_excess:.2e}")))
        }
        "reversal-bound" => {
            let c0 = 1.0_f64.max(1.0 + 2.0 * params.a);
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..3 {
                let rho0 = random_density(mesh, &mut rng, 0.05, 0.95);
                let run = solve_parabolic(&rho0, boundary, params, 0.5, None)?;
                let et = dissipation_et(&run.trajectory).value;
                let rev = rate_functional_it(&run.trajectory.reversed(), params)?.report.it;
                worst = worst.max((rev - c0 * et) / (1.0 + c0 * et));
            }
            Ok((worst <= 1e-8, format!("max relative excess over the dissipation bound {worst:.2e}")))
        }
        "free-energy-minimum" => {
            let rho_bar = solve_elliptic(boundary, params, mesh)?;
            let at_minimum = relative_free_energy(&rho_bar, &rho_bar)?;
            let perturbed = random_density(mesh, &mut rng, 0.05, 0.95);
            let away = relative_free_energy(&perturbed, &rho_bar)?;
            let pass = at_minimum.abs() <= 1e-14 && away > 0.0;
            Ok((pass, format!("value at the minimizer {at_minimum:.1e}, perturbed {away:.4}")))
        }
        "interpolation-endpoints" => {
            let rho_bar = solve_elliptic(boundary, params, mesh)?;
            let faces = boundary.sample_mesh(mesh);
            let target = random_density(mesh, &mut rng, 0.05, 0.95);
            let path = interpolation_path(&rho_bar, &target, faces.clone(), &Schedule::Power { p: 1.7 }, 9)?;
            let gap = |frame: &[f64], f: &DensityField| {
                frame
                    .iter()
                    .zip(&f.values)
                    .map(|(&x, &y)| (x - y).abs())
                    .fold(0.0_f64, f64::max)
            };
            let d0 = gap(&path.frames[0], &rho_bar);
            let dn = gap(path.frames.last().unwrap(), &target);
            let pass = d0 <= 1e-15 && dn <= 1e-15 && !trace_mismatch(&rho_bar, &faces);
            Ok((pass, format!("endpoint gaps {d0:.1e} and {dn:.1e}")))
        }
        other => unreachable!("unlisted check {other}"),
    }
}

fn lemmas_csv(outcomes: &[CheckOutcome]) -> String {
    let mut out = String::from("check,status,detail\n");
    for o in outcomes {
        let status = if o.pass { "pass" } else { "fail" };
        out.push_str(&format!("{},{},{}\n", o.name, status, output::csv_quote(&o.detail)));
    }
    out
}

/// Unit-time linear segment between two random densities; a generic
/// non-solution trajectory for the variational checks.
fn random_segment(
    mesh: &Mesh,
    boundary: &BoundaryProfile,
    rng: &mut impl Rng,
) -> bdex_core::Result<bdex_core::mesh::Trajectory> {
    let from = random_density(mesh, rng, 0.05, 0.95);
    let to = random_density(mesh, rng, 0.05, 0.95);
    let faces = boundary.sample_mesh(mesh);
    interpolation_path(&from, &to, faces, &Schedule::Power { p: 1.0 }, 8)
}
