//! Process-spawning helpers shared by the CLI integration tests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Command pointing at the compiled binary under test.
pub fn bdex() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bdex"))
}

/// Writes `text` as a config file under `dir` and returns its path.
pub fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Asserts the exit status, printing both streams on mismatch.
pub fn expect_exit(out: &Output, want: i32) {
    let got = out.status.code().expect("process exited without a status code");
    if got != want {
        panic!(
            "exit {got}, want {want}\nstdout:\n{}stderr:\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr),
        );
    }
}
