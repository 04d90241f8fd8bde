//! `bdex`: experiment runner for the boundary-driven exclusion toolkit.
//!
//! `bdex run <config>` executes one experiment described by a flat
//! sectioned config file and writes its artifacts plus a manifest;
//! `bdex validate <config>` performs the full static validation without
//! running anything. Exit codes: 0 ok, 1 usage, 2 invalid config,
//! 3 runtime failure (including failed suite checks).
//!
//! Reruns with the same config produce byte-identical files: wall time
//! goes to stderr, never into artifacts, and the worker count only
//! changes how work is shared, not any output.

mod config;
mod experiments;
mod output;
mod parallel;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::{parse, resolve, ConfigError, Experiment};
use output::{manifest_json, Manifest};

#[derive(Parser)]
#[command(name = "bdex", version, about = "Run lattice-gas and quasi-potential experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by the config and write its artifacts.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Worker cap for replica-level parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory; overrides the config's `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config end to end without running anything.
    Validate {
        /// Path to the experiment config.
        config: PathBuf,
    },
}

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match cli.command {
        Command::Run { config, jobs, out } => run(&config, jobs, out.as_deref()),
        Command::Validate { config } => validate(&config),
    }
}

fn report_errors(errors: &[ConfigError]) {
    for e in errors {
        eprintln!("{e}");
    }
}

/// Reads and resolves a config file; `Err` carries the exit code after the
/// diagnostics have been printed.
fn load(path: &Path) -> Result<(String, Experiment), u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        EXIT_USAGE
    })?;
    let parsed = parse(&text).map_err(|errs| {
        report_errors(&errs);
        EXIT_VALIDATION
    })?;
    if parsed.is_empty() {
        eprintln!("empty config: nothing to run");
        return Err(EXIT_USAGE);
    }
    let experiment = resolve(&parsed).map_err(|errs| {
        report_errors(&errs);
        EXIT_VALIDATION
    })?;
    Ok((text, experiment))
}

fn validate(path: &Path) -> ExitCode {
    match load(path) {
        Ok(_) => {
            println!("ok");
            ExitCode::SUCCESS
        }
        Err(code) => ExitCode::from(code),
    }
}

fn run(path: &Path, jobs: Option<usize>, out_override: Option<&Path>) -> ExitCode {
    let (text, experiment) = match load(path) {
        Ok(v) => v,
        Err(code) => return ExitCode::from(code),
    };
    let jobs = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1);

    let start = Instant::now();
    let artifacts = match experiments::execute(&experiment, jobs) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("runtime error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };

    let out_dir: PathBuf = out_override
        .map(Path::to_path_buf)
        .or_else(|| experiment.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("cannot create {}: {e}", out_dir.display());
        return ExitCode::from(EXIT_RUNTIME);
    }
    for (name, bytes) in &artifacts.files {
        if let Err(e) = std::fs::write(out_dir.join(name), bytes) {
            eprintln!("cannot write {name}: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let manifest = Manifest {
        tool: "bdex",
        version: env!("CARGO_PKG_VERSION"),
        core_version: bdex_core::VERSION,
        experiment: experiment.kind.slug(),
        seed: experiment.seed,
        streams: &artifacts.streams,
        outputs: artifacts.files.iter().map(|(n, _)| n.as_str()).collect(),
        config_text: &text,
    };
    if let Err(e) = std::fs::write(out_dir.join("manifest.json"), manifest_json(&manifest)) {
        eprintln!("cannot write manifest.json: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }

    println!("{}", artifacts.summary);
    println!("wrote {} files to {}", artifacts.files.len() + 1, out_dir.display());
    eprintln!("wall time {:.3}s", start.elapsed().as_secs_f64());

    if !artifacts.failures.is_empty() {
        eprintln!("failed checks: {}", artifacts.failures.join(", "));
        return ExitCode::from(EXIT_RUNTIME);
    }
    ExitCode::SUCCESS
}
