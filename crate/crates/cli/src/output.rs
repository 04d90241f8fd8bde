//! CSV and manifest emission. Every writer is a pure function of its
//! inputs: no clocks, no paths, no locale, so identical runs produce
//! byte-identical artifacts.

use std::collections::BTreeMap;

use bdex_core::mesh::{Mesh, Trajectory};
use serde::Serialize;

/// Shortest round-trip decimal for `v`; CSV readers recover the exact f64.
fn num(v: f64) -> String {
    format!("{v}")
}

/// Always-quoted CSV cell with doubled inner quotes.
pub fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn coord_header(d: usize) -> String {
    (1..=d).map(|k| format!("u{k}")).collect::<Vec<_>>().join(",")
}

/// One row per node: coordinates, then the named columns.
pub fn field_table_csv(mesh: &Mesh, columns: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    out.push_str(&coord_header(mesh.d));
    for (name, col) in columns {
        assert_eq!(col.len(), mesh.node_count(), "column {name} has wrong length");
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let mut coords = vec![0.0; mesh.d];
    for i in 0..mesh.node_count() {
        mesh.node_coords(i, &mut coords);
        let mut row: Vec<String> = coords.iter().map(|&c| num(c)).collect();
        for (_, col) in columns {
            row.push(num(col[i]));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One block of rows per frame: frame index, time, coordinates, value.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mesh = &traj.mesh;
    let mut out = String::new();
    out.push_str("frame,t,");
    out.push_str(&coord_header(mesh.d));
    out.push_str(",value\n");
    let mut coords = vec![0.0; mesh.d];
    for (n, frame) in traj.frames.iter().enumerate() {
        let t = n as f64 * traj.dt;
        for i in 0..mesh.node_count() {
            mesh.node_coords(i, &mut coords);
            let mut row = vec![num(n as f64), num(t)];
            row.extend(coords.iter().map(|&c| num(c)));
            row.push(num(frame[i]));
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

/// Per-slice rate-functional costs at the right endpoints of the steps.
pub fn per_slice_csv(dt: f64, costs: &[f64], residuals: &[f64]) -> String {
    assert_eq!(costs.len(), residuals.len());
    let mut out = String::from("slice,t,cost,solver_residual\n");
    for (k, (&c, &r)) in costs.iter().zip(residuals).enumerate() {
        let row = [num((k + 1) as f64), num((k + 1) as f64 * dt), num(c), num(r)];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Exact versus sampled stationary weight for each packed state.
pub fn histogram_csv(exact: &[f64], empirical: &[f64]) -> String {
    assert_eq!(exact.len(), empirical.len());
    let mut out = String::from("state,exact,empirical\n");
    for (s, (&e, &h)) in exact.iter().zip(empirical).enumerate() {
        out.push_str(&format!("{s},{},{}\n", num(e), num(h)));
    }
    out
}

/// Transient law versus replica counts for each packed state.
pub fn transient_csv(probability: &[f64], expected: &[f64], observed: &[u64]) -> String {
    let mut out = String::from("state,probability,expected_count,observed_count\n");
    for s in 0..probability.len() {
        out.push_str(&format!(
            "{s},{},{},{}\n",
            num(probability[s]),
            num(expected[s]),
            observed[s]
        ));
    }
    out
}

/// Run manifest: everything needed to reproduce the run, nothing that
/// varies between identical reruns.
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub experiment: &'a str,
    pub seed: u64,
    /// Stream derivation actually used, consumer name to rule.
    pub streams: &'a BTreeMap<String, String>,
    /// Artifact file names in write order, relative to the output dir.
    pub outputs: Vec<&'a str>,
    /// Verbatim config text; parsing it reproduces the run.
    pub config_text: &'a str,
}

pub fn manifest_json(m: &Manifest) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(m).expect("manifest serializes");
    bytes.push(b'\n');
    bytes
}
