//! Command-line front end of `otlab`.
//!
//! Every command reads measures as `{"points": [[x, ...], ...], "weights": [w, ...]}`
//! and plans as `{"entries": [[i, j, mass], ...]}`, writes pretty JSON with a
//! fixed field order, and records `run_meta` (version, flags, wall time) in a
//! `<name>.meta.json` file next to its main output, so the main output is
//! byte-identical across runs.
//!
//! Exit codes: 0 on success, 2 on invalid input or I/O failure (with
//! `{"error": {"kind": "io" | "validation", ...}}` on stderr), 3 when an
//! iterative solver stops before converging (partial output is still written).

pub mod args;
pub mod commands;
pub mod error;
pub mod io;

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct RunMeta {
    pub version: &'static str,
    pub flags: Vec<String>,
    pub wall_time_seconds: f64,
}

fn dispatch(cli: &Cli) -> CliResult<PathBuf> {
    match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Select(a) => commands::select(a),
        Command::Rearrange1d(a) => commands::rearrange1d(a),
        Command::Certify(a) => commands::certify(a),
        Command::Density(a) => commands::density(a),
        Command::Pde(a) => commands::pde(a),
        Command::Oracle(c) => commands::oracle(c),
    }
}

/// Runs a parsed command line and returns the process exit code. `flags` are
/// the raw arguments, recorded in the run metadata.
pub fn run(cli: &Cli, flags: Vec<String>) -> i32 {
    let start = Instant::now();
    let result = dispatch(cli);
    let primary = match &result {
        Ok(p) => Some(p.clone()),
        Err(CliError::NonConvergence { primary, .. }) => Some(primary.clone()),
        Err(_) => None,
    };
    if let Some(primary) = primary {
        let meta = RunMeta {
            version: env!("CARGO_PKG_VERSION"),
            flags,
            wall_time_seconds: start.elapsed().as_secs_f64(),
        };
        if let Err(e) = io::write_json(&io::meta_path(&primary), &meta) {
            eprintln!("{}", e.to_json());
            return e.exit_code();
        }
    }
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
