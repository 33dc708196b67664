//! Command front end: `run`, `compare`, `bench` and `validate`.
//!
//! Exit codes: `0` success, `1` configuration error, `2` runtime failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_config, to_config_text};
use crate::error::Error;
use crate::io;
use crate::physics;
use crate::sim::{self, RunConfig, RunError};

/// Name of the configuration echo written into every output directory.
pub const CONFIG_ECHO: &str = "config.echo";

#[derive(Debug, Parser)]
#[command(name = "mmc-tdgl", version, about = "TDGL phase-separation solver for MMC hydrogels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum CliCommand {
    /// Run one simulation and write its energy log and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the L2 distance between two runs' snapshots at a time.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        time: f64,
    },
    /// Compare step policies against a fine reference run.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that G stays non-negative over the admissible band.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error:\n{0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn check_path(what: &str, p: &Path) -> Result<(), CliError> {
    if p.as_os_str().is_empty() {
        Err(CliError::Config(format!("{what}: path must not be empty")))
    } else {
        Ok(())
    }
}

/// Reads and parses a configuration file; `out` replaces `output_dir`.
pub fn load_config(path: &Path, out: Option<&Path>) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)
        .map_err(|e| CliError::Config(format!("{}:\n{e}", path.display())))?;
    if let Some(out) = out {
        cfg.output_dir = out.to_path_buf();
    }
    Ok(cfg)
}

fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| runtime(Error::io(dir, e)))?;
    let echo = dir.join(CONFIG_ECHO);
    fs::write(&echo, to_config_text(cfg)).map_err(|e| runtime(Error::io(echo, e)))
}

fn run_error(e: RunError, out_dir: &Path) -> CliError {
    match e {
        RunError::Config(e) => CliError::Config(e.to_string()),
        RunError::Step(failure) => {
            // keep the partial log and the last accepted state for diagnosis
            let _ = io::write_energy_csv(&failure.log, &out_dir.join("energy.csv"));
            let _ = io::write_field_csv(&failure.last_good, &out_dir.join("last_good.csv"));
            let _ = fs::write(out_dir.join("failure.txt"), format!("{failure}\n"));
            runtime(failure)
        }
    }
}

pub fn cmd_run(config: &Path, out: &Path, w: &mut dyn Write) -> Result<(), CliError> {
    check_path("--config", config)?;
    check_path("--out", out)?;
    let cfg = load_config(config, Some(out))?;
    prepare_out(&cfg)?;
    let result = sim::run(&cfg).map_err(|e| run_error(e, out))?;
    io::write_energy_csv(&result.log, &out.join("energy.csv")).map_err(runtime)?;
    for (t, f) in &result.snapshots {
        io::write_snapshot(f, *t, out).map_err(runtime)?;
    }
    let last = result.log.last().expect("initial row");
    writeln!(
        w,
        "{} steps to t = {}; U = {}, |phi|_h = {}",
        result.steps(),
        last.t,
        last.u,
        last.l2_norm
    )
    .map_err(runtime)?;
    Ok(())
}

/// L² distance between the `time` snapshots of two run directories.
pub fn compare_dirs(a: &Path, b: &Path, time: f64) -> Result<f64, CliError> {
    let echo = a.join(CONFIG_ECHO);
    let cfg = load_config(&echo, None)?;
    let grid = cfg.grid.build().map_err(|e| CliError::Config(e.to_string()))?;
    let name = format!("{}.csv", io::snapshot_stem(time));
    let fa = io::read_field_csv(&a.join(&name), grid).map_err(runtime)?;
    let fb = io::read_field_csv(&b.join(&name), grid).map_err(runtime)?;
    sim::relative_error(&fa, &fb).map_err(runtime)
}

pub fn cmd_compare(a: &Path, b: &Path, time: f64, w: &mut dyn Write) -> Result<(), CliError> {
    check_path("--a", a)?;
    check_path("--b", b)?;
    if !(time.is_finite() && time >= 0.0) {
        return Err(CliError::Config(format!("--time: must be >= 0, got {time}")));
    }
    let re = compare_dirs(a, b, time)?;
    writeln!(w, "{re}").map_err(runtime)
}

pub fn cmd_bench(config: &Path, out: &Path, w: &mut dyn Write) -> Result<(), CliError> {
    check_path("--config", config)?;
    check_path("--out", out)?;
    let cfg = load_config(config, Some(out))?;
    prepare_out(&cfg)?;
    let table = sim::bench(&cfg).map_err(|e| match e {
        RunError::Config(e) => CliError::Config(e.to_string()),
        RunError::Step(f) => runtime(format!("reference run failed: {f}")),
    })?;
    io::write_bench_csv(&table, &out.join("bench.csv")).map_err(runtime)?;
    writeln!(w, "{}", io::bench_header(&table.times)).map_err(runtime)?;
    for row in std::iter::once(&table.reference).chain(&table.rows) {
        let errs: Vec<String> = row
            .errors
            .iter()
            .map(|e| e.map_or_else(|| "-".into(), |e| format!("{e:.4e}")))
            .collect();
        let steps = row.steps.map_or_else(|| "-".into(), |s| s.to_string());
        write!(w, "{},{},{:.3},{}", row.policy, steps, row.wall_seconds, errs.join(","))
            .map_err(runtime)?;
        if let Some(f) = &row.failure {
            write!(w, "  # failed: {f}").map_err(runtime)?;
        }
        writeln!(w).map_err(runtime)?;
    }
    Ok(())
}

pub fn cmd_validate(config: &Path, w: &mut dyn Write) -> Result<(), CliError> {
    check_path("--config", config)?;
    let cfg = load_config(config, None)?;
    let band = cfg.admissible_band().map_err(|e| CliError::Config(e.to_string()))?;
    let report = physics::validate_params(&cfg.params, &band);
    writeln!(w, "{report}").map_err(runtime)?;
    if report.ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("chi/tau/ncoef/rho: {report}")))
    }
}

pub fn execute(cmd: &CliCommand, w: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        CliCommand::Run { config, out } => cmd_run(config, out, w),
        CliCommand::Compare { a, b, time } => cmd_compare(a, b, *time, w),
        CliCommand::Bench { config, out } => cmd_bench(config, out, w),
        CliCommand::Validate { config } => cmd_validate(config, w),
    }
}
