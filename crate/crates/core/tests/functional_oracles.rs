//! Cross-checks of the path functionals against independent scalar
//! quadrature, known scaling laws, and the variational dominance property.

use bdex_core::boundary::BoundaryProfile;
use bdex_core::functionals::{
    dissipation_et, energy_qt, evaluate_jg, measure_distance, random_test_field,
    rate_functional_it, TestField,
};
use bdex_core::pde::solve_parabolic;
use bdex_core::transport::chi;
use bdex_core::{DensityField, Mesh, ModelParams, Trajectory};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed)
}

/// Adaptive Simpson quadrature, used as an oracle uncoupled from the mesh.
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rule(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = rule(f, a, m);
        let right = rule(f, m, b);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    recurse(f, a, b, rule(f, a, b), tol, 40)
}

// smooth static profile with traces 0.2 and 0.8
fn quartic(u: f64) -> f64 {
    0.5 + 0.3 * u - 0.12 * (1.0 - u * u) * u
}

fn quartic_prime(u: f64) -> f64 {
    0.3 - 0.12 * (1.0 - 3.0 * u * u)
}

fn static_quartic(m1: usize, frames: usize, dt: f64) -> Trajectory {
    let mesh = Mesh::new(1, m1, 1).unwrap();
    let b = BoundaryProfile::two_sided(0.2, 0.8).unwrap();
    let field = DensityField::from_fn(mesh, |u| quartic(u[0]));
    Trajectory::new(
        mesh,
        dt,
        vec![field.values.clone(); frames],
        b.sample_mesh(&mesh),
    )
    .unwrap()
}

#[test]
fn dissipation_converges_to_the_scalar_quadrature() {
    let exact = simpson(
        &|u| {
            let g = quartic_prime(u);
            g * g / chi(quartic(u))
        },
        -1.0,
        1.0,
        1e-12,
    );
    let mut errors = Vec::new();
    for m1 in [24, 48, 96] {
        let traj = static_quartic(m1, 3, 0.5);
        let per_unit_time = dissipation_et(&traj).value / traj.total_time();
        errors.push((per_unit_time - exact).abs() / exact);
    }
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
    let ratio = errors[1] / errors[2];
    assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}, errors {errors:?}");
    assert!(errors[2] < 5e-4, "{errors:?}");
}

#[test]
fn energy_converges_to_the_scalar_quadrature() {
    let exact = simpson(
        &|u| {
            let g = quartic_prime(u);
            g * g
        },
        -1.0,
        1.0,
        1e-12,
    );
    let mut errors = Vec::new();
    for m1 in [24, 48, 96] {
        let traj = static_quartic(m1, 5, 0.25);
        let per_unit_time = energy_qt(&traj) / traj.total_time();
        errors.push((per_unit_time - exact).abs() / exact);
    }
    assert!(errors[2] < errors[1] && errors[1] < errors[0], "{errors:?}");
    assert!(errors[2] < 2e-3, "{errors:?}");
}

fn random_fourier_trajectory(mesh: Mesh, frames: usize, dt: f64, seed: u64) -> Trajectory {
    use rand::Rng;
    let mut gen = rng(seed);
    let b = BoundaryProfile::two_sided(0.25, 0.75).unwrap();
    let coeffs: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                gen.gen_range(-0.15..0.15),
                gen.gen_range(1.0..3.5),
                gen.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let all: Vec<Vec<f64>> = (0..frames)
        .map(|n| {
            let t = n as f64 * dt;
            DensityField::from_fn(mesh, |u| {
                let mut v = 0.5 + 0.2 * u[0];
                for &(c, freq, phase) in &coeffs {
                    v += c
                        * (freq * std::f64::consts::PI * u[0] + phase).sin()
                        * (1.5 * t + phase).cos();
                }
                v.clamp(0.02, 0.98)
            })
            .values
        })
        .collect();
    Trajectory::new(mesh, dt, all, b.sample_mesh(&mesh)).unwrap()
}

#[test]
fn no_test_field_beats_the_variational_cost() {
    let params = ModelParams::new(1.0, 1, 8).unwrap();
    let mesh = Mesh::new(1, 20, 1).unwrap();
    for seed in 0..10 {
        let traj = random_fourier_trajectory(mesh, 9, 0.1, seed);
        let eval = rate_functional_it(&traj, &params).unwrap();
        let mut gen = rng(1000 + seed);
        for _ in 0..5 {
            let g = random_test_field(&mesh, 0.1, 9, 0.8, &mut gen).unwrap();
            let jg = evaluate_jg(&traj, &g, &params).unwrap();
            assert!(
                jg <= eval.report.it + 1e-8 * (1.0 + eval.report.it),
                "seed {seed}: jg {jg} exceeds it {}",
                eval.report.it
            );
        }
    }
}

#[test]
fn pairing_gap_at_perturbed_optimizers_is_quadratic() {
    let params = ModelParams::new(0.5, 1, 8).unwrap();
    let mesh = Mesh::new(1, 20, 1).unwrap();
    let traj = random_fourier_trajectory(mesh, 7, 0.15, 99);
    let eval = rate_functional_it(&traj, &params).unwrap();
    let mut gen = rng(5);
    let noise = random_test_field(&mesh, 0.15, 7, 1.0, &mut gen).unwrap();
    let gap = |delta: f64| {
        let frames: Vec<Vec<f64>> = eval
            .optimizer
            .frames
            .iter()
            .zip(&noise.frames)
            .map(|(g, n)| g.iter().zip(n).map(|(a, b)| a + delta * b).collect())
            .collect();
        let g = TestField::new(mesh, 0.15, frames).unwrap();
        eval.report.it - evaluate_jg(&traj, &g, &params).unwrap()
    };
    let g1 = gap(0.02);
    let g2 = gap(0.01);
    assert!(g1 > 0.0 && g2 > 0.0);
    let ratio = g1 / g2;
    assert!((ratio - 4.0).abs() < 0.4, "gap ratio {ratio}");
}

#[test]
fn cost_of_solution_paths_shrinks_quadratically_in_the_step() {
    let params = ModelParams::new(1.0, 1, 8).unwrap();
    let mesh = Mesh::new(1, 32, 1).unwrap();
    let b = BoundaryProfile::two_sided(0.2, 0.8).unwrap();
    let rho0 = DensityField::from_fn(mesh, |u| 0.5 + 0.3 * u[0] + 0.15 * (1.0 - u[0] * u[0]));
    let base_dt = 2.0e-4;
    let mut costs = Vec::new();
    for refine in [1.0, 2.0] {
        let run = solve_parabolic(&rho0, &b, &params, 0.25, Some(base_dt / refine)).unwrap();
        let it = rate_functional_it(&run.trajectory, &params)
            .unwrap()
            .report
            .it;
        costs.push(it);
    }
    let ratio = costs[0] / costs[1];
    assert!(
        ratio > 3.0 && ratio < 5.0,
        "costs {costs:?}, ratio {ratio}"
    );
}

#[test]
fn cost_separates_solutions_from_forced_paths() {
    let params = ModelParams::new(1.0, 1, 8).unwrap();
    let mesh = Mesh::new(1, 32, 1).unwrap();
    let b = BoundaryProfile::two_sided(0.2, 0.8).unwrap();
    let rho0 = DensityField::from_fn(mesh, |u| 0.5 + 0.3 * u[0]);
    let run = solve_parabolic(&rho0, &b, &params, 0.2, None).unwrap();
    let solution_cost = rate_functional_it(&run.trajectory, &params)
        .unwrap()
        .report
        .it;
    // force the path against the flow: linear drift toward a tilted state
    let drift = random_fourier_trajectory(mesh, 9, 0.025, 321);
    let forced_cost = rate_functional_it(&drift, &params).unwrap().report.it;
    assert!(
        solution_cost < 1e-6,
        "solution path should be nearly free: {solution_cost}"
    );
    assert!(
        forced_cost > 1e-3,
        "forced path should be visibly charged: {forced_cost}"
    );
}

#[test]
fn cost_of_perturbed_solutions_scales_with_the_squared_amplitude() {
    let params = ModelParams::new(0.0, 1, 8).unwrap();
    let mesh = Mesh::new(1, 24, 1).unwrap();
    let b = BoundaryProfile::two_sided(0.3, 0.7).unwrap();
    let rho0 = DensityField::from_fn(mesh, |u| 0.5 + 0.2 * u[0]);
    let run = solve_parabolic(&rho0, &b, &params, 0.1, Some(5.0e-4)).unwrap();
    let base = run.trajectory;
    let perturbed = |delta: f64| {
        let frames: Vec<Vec<f64>> = base
            .frames
            .iter()
            .enumerate()
            .map(|(n, f)| {
                let t = n as f64 * base.dt;
                let mut frame = f.clone();
                let mut u = [0.0];
                for (i, v) in frame.iter_mut().enumerate() {
                    base.mesh.node_coords(i, &mut u);
                    *v += delta * (1.0 - u[0] * u[0]) * (8.0 * t).sin();
                }
                frame
            })
            .collect();
        let traj = Trajectory::new(base.mesh, base.dt, frames, base.boundary.clone()).unwrap();
        rate_functional_it(&traj, &params).unwrap().report.it
    };
    let base_cost = rate_functional_it(&base, &params).unwrap().report.it;
    let c1 = perturbed(0.02) - base_cost;
    let c2 = perturbed(0.01) - base_cost;
    let ratio = c1 / c2;
    assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio} ({c1} / {c2})");
}

#[test]
fn oscillatory_profiles_come_weakly_close_to_their_mean() {
    let mesh = Mesh::new(1, 128, 1).unwrap();
    let flat = DensityField::constant(mesh, 0.5);
    let mut prev = f64::INFINITY;
    for j in [1, 2, 4, 8] {
        let osc = DensityField::from_fn(mesh, |u| {
            0.5 + 0.3 * (j as f64 * std::f64::consts::PI * u[0]).sin()
        });
        let d = measure_distance(&osc, &flat, 12).unwrap();
        assert!(d < prev, "j {j}: distance {d} did not decrease from {prev}");
        prev = d;
    }
    assert!(prev < 0.02, "distance at the highest frequency: {prev}");
}
