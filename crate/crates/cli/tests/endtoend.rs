//! Full runs of every experiment kind on small instances.

mod common;

use common::{bdex, expect_exit, write_config};

fn run(config_text: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.cfg", config_text);
    let out = bdex()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    expect_exit(&out, 0);
    (dir, String::from_utf8_lossy(&out.stdout).into_owned())
}

fn artifact(dir: &tempfile::TempDir, name: &str) -> Vec<u8> {
    std::fs::read(dir.path().join("out").join(name)).unwrap()
}

fn json(dir: &tempfile::TempDir, name: &str) -> serde_json::Value {
    serde_json::from_slice(&artifact(dir, name)).unwrap()
}

fn csv_lines(dir: &tempfile::TempDir, name: &str) -> Vec<String> {
    String::from_utf8(artifact(dir, name)).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn hydrostatics_writes_a_calibrated_profile() {
    let (dir, stdout) = run("[experiment]
kind = hydrostatics
seed = 3

[model]
a = 0
d = 1
n = 6

[boundary]
kind = affine
left = 0.25
right = 0.75

[mesh]
m1 = 4

[run]
burn_in = 0.2
run_time = 2.0
batches = 20
samples_per_batch = 1
replicas = 2
");
    assert!(stdout.contains("wrote 3 files"), "{stdout}");

    let csv = csv_lines(&dir, "profile.csv");
    assert_eq!(csv[0], "u1,empirical,standard_error,target,z");
    assert_eq!(csv.len(), 1 + 4);

    let report = json(&dir, "hydrostatics.json");
    let l1 = report["l1_distance"].as_f64().unwrap();
    let z = report["max_abs_z"].as_f64().unwrap();
    assert!(l1.is_finite() && l1 < 0.5, "l1 {l1}");
    assert!(z.is_finite() && z < 10.0, "z {z}");
    assert_eq!(report["replicas"], 2);
}

#[test]
fn hydrostatics_handles_transverse_reservoir_variation() {
    let (dir, _) = run("[experiment]
kind = hydrostatics
seed = 5

[model]
a = 0.5
d = 2
n = 6

[boundary]
kind = tabulated
left = 0.3, 0.4, 0.35
right = 0.7, 0.6, 0.65

[mesh]
m1 = 4
mt = 3

[run]
burn_in = 0.5
run_time = 5.0
batches = 20
samples_per_batch = 2
");
    let csv = csv_lines(&dir, "profile.csv");
    assert_eq!(csv[0], "u1,u2,empirical,standard_error,target,z");
    assert_eq!(csv.len(), 1 + 4 * 3);

    let report = json(&dir, "hydrostatics.json");
    let z = report["max_abs_z"].as_f64().unwrap();
    assert!(z.is_finite() && z < 10.0, "z {z}");
}

#[test]
fn oracle_validation_matches_the_exact_chain() {
    let (dir, _) = run("[experiment]
kind = oracle-validate
seed = 7

[model]
a = 1
d = 1
n = 2

[boundary]
kind = affine
left = 0.2
right = 0.8

[run]
burn_in = 5
run_time = 200
transient_time = 0.05
replicas = 3000
");
    let report = json(&dir, "oracle.json");
    assert_eq!(report["sites"], 3);
    assert_eq!(report["states"], 8);
    let tv = report["tv_distance"].as_f64().unwrap();
    let p = report["chi_square_p"].as_f64().unwrap();
    assert!(tv < 0.05, "tv {tv}");
    assert!(p > 1e-4, "p {p}");

    assert_eq!(csv_lines(&dir, "histogram.csv").len(), 1 + 8);
    assert_eq!(csv_lines(&dir, "transient.csv").len(), 1 + 8);
}

#[test]
fn lemma_suite_passes_every_check() {
    let (dir, stdout) = run("[experiment]
kind = lemma-suite
seed = 1

[model]
a = 0.5
d = 1
n = 2

[boundary]
kind = affine
left = 0.3
right = 0.7

[mesh]
m1 = 8
");
    assert!(stdout.contains("11/11 checks passed"), "{stdout}");

    let report = json(&dir, "lemmas.json");
    assert_eq!(report["total"], 11);
    assert_eq!(report["passed"], 11);

    let csv = csv_lines(&dir, "lemmas.csv");
    assert_eq!(csv[0], "check,status,detail");
    assert_eq!(csv.len(), 1 + 11);
    for row in &csv[1..] {
        assert!(row.contains(",pass,"), "{row}");
    }
}

#[test]
fn interpolation_paths_carry_positive_cost() {
    let (dir, _) = run("[experiment]
kind = rate-functional
seed = 0

[model]
a = 1
d = 1
n = 8

[boundary]
kind = affine
left = 0.25
right = 0.75

[mesh]
m1 = 8

[path]
kind = interpolation
power = 1.5
frames = 16

[from]
kind = constant
value = 0.3

[to]
kind = constant
value = 0.6
");
    let report = json(&dir, "functionals.json");
    assert_eq!(report["path_kind"], "interpolation");
    assert_eq!(report["frames"], 16);
    let it = report["report"]["it"].as_f64().unwrap();
    assert!(it.is_finite() && it > 0.0, "it {it}");

    assert_eq!(csv_lines(&dir, "per_slice.csv").len(), 1 + 15);
}

#[test]
fn solution_paths_cost_nothing() {
    let (dir, _) = run("[experiment]
kind = rate-functional
seed = 0

[model]
a = 1
d = 1
n = 8

[boundary]
kind = affine
left = 0.25
right = 0.75

[mesh]
m1 = 16

[path]
kind = solution

[initial]
kind = affine
left = 0.25
right = 0.75

[time]
t_end = 0.2
");
    let report = json(&dir, "functionals.json");
    assert_eq!(report["path_kind"], "solution");
    let it = report["report"]["it"].as_f64().unwrap();
    assert!((0.0..1e-4).contains(&it), "it {it}");
}

#[test]
fn quasipotential_reports_the_envelope_of_both_bounds() {
    let (dir, _) = run("[experiment]
kind = quasipotential
seed = 0

[model]
a = 0
d = 1
n = 8

[boundary]
kind = constant
value = 0.3

[mesh]
m1 = 8

[target]
kind = constant
value = 0.45

[options]
frames = 8
refine_knots = false
t_cap = 4
stride = 1
bridge_frames = 8
");
    let report = json(&dir, "quasipotential.json");
    let value = report["value"].as_f64().unwrap();
    let interp = report["interpolation"]["value"].as_f64().unwrap();
    let rev = report["reversal"]["value"].as_f64().unwrap();
    assert!(value.is_finite() && value > 0.0, "value {value}");
    assert_eq!(value, interp.min(rev));

    assert_eq!(csv_lines(&dir, "target_profile.csv").len(), 1 + 8);
    assert_eq!(csv_lines(&dir, "per_slice.csv").len(), 1 + 7);
}
