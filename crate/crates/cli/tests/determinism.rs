//! Reruns, worker counts, and manifest round-trips all yield identical bytes.

mod common;

use std::path::Path;

use common::{bdex, expect_exit, write_config};

const HYDRODYNAMICS: &str = "[experiment]
kind = hydrodynamics
seed = 4

[model]
a = 1
d = 1
n = 8

[boundary]
kind = affine
left = 0.3
right = 0.7

[mesh]
m1 = 6

[time]
t_end = 0.05
stride = 4

[initial]
kind = cosine
mean = 0.5
amplitude = 0.2
mode = 2
";

const HYDROSTATICS: &str = "[experiment]
kind = hydrostatics
seed = 11

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
replicas = 3
";

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

fn assert_same_artifacts(a: &Path, b: &Path) {
    let sa = snapshot(a);
    let sb = snapshot(b);
    let names_a: Vec<&str> = sa.iter().map(|(n, _)| n.as_str()).collect();
    let names_b: Vec<&str> = sb.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names_a, names_b);
    for ((name, bytes), (_, other)) in sa.iter().zip(&sb) {
        assert!(bytes == other, "{name} differs between runs");
    }
}

fn run_into(config: &Path, out: &Path, jobs: Option<usize>) {
    let mut cmd = bdex();
    cmd.arg("run").arg(config).arg("--out").arg(out);
    if let Some(j) = jobs {
        cmd.arg("--jobs").arg(j.to_string());
    }
    let out = cmd.output().unwrap();
    expect_exit(&out, 0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.cfg", HYDRODYNAMICS);
    let (out1, out2) = (dir.path().join("run1"), dir.path().join("run2"));
    run_into(&config, &out1, None);
    run_into(&config, &out2, None);
    assert_same_artifacts(&out1, &out2);

    let names: Vec<String> = snapshot(&out1).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["hydrodynamics.json", "manifest.json", "trajectory.csv"]);
}

#[test]
fn worker_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.cfg", HYDROSTATICS);
    let (out1, out2) = (dir.path().join("serial"), dir.path().join("parallel"));
    run_into(&config, &out1, Some(1));
    run_into(&config, &out2, Some(3));
    assert_same_artifacts(&out1, &out2);
}

#[test]
fn manifest_carries_the_verbatim_config_and_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.cfg", HYDRODYNAMICS);
    let out1 = dir.path().join("first");
    run_into(&config, &out1, None);

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out1.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "bdex");
    assert_eq!(manifest["experiment"], "hydrodynamics");
    assert_eq!(manifest["seed"], 4);
    let outputs: Vec<&str> =
        manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(outputs.contains(&"trajectory.csv") && outputs.contains(&"hydrodynamics.json"));

    let recovered = manifest["config_text"].as_str().unwrap();
    assert_eq!(recovered, HYDRODYNAMICS);

    let replay = write_config(dir.path(), "replay.cfg", recovered);
    let out2 = dir.path().join("second");
    run_into(&replay, &out2, None);
    assert_same_artifacts(&out1, &out2);
}

#[test]
fn output_section_in_the_config_sets_the_directory() {
    let dir = tempfile::tempdir().unwrap();
    let text = HYDRODYNAMICS.replace(
        "[model]",
        "[output]\ndir = artifacts\n\n[model]",
    );
    let config = write_config(dir.path(), "exp.cfg", &text);
    let out = bdex().arg("run").arg(&config).current_dir(dir.path()).output().unwrap();
    expect_exit(&out, 0);
    assert!(dir.path().join("artifacts").join("manifest.json").is_file());
}
