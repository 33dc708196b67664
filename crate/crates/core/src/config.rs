//! Flat `key = value` configuration text.
//!
//! Blank lines and `#` comments are ignored; omitted keys keep their
//! defaults. Unknown or repeated keys and malformed values are errors
//! carrying the line number. Lists are comma separated, e.g.
//!
//! ```text
//! nx = 128
//! temp = 50
//! lambda_table = 100:1, 200:1.5, 300:2, 400:3, 500:4, inf:5
//! snapshot_times = 0.1, 1, 10
//! bench_candidates = 0.05, 0.01, adaptive
//! ```
//!
//! [`to_config_text`] prints every key, and parsing the printed text yields
//! the same [`RunConfig`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::linsolve::ToleranceMode;
use crate::sim::{BenchPolicy, RunConfig, StepMode};
use crate::stepper::LambdaSchedule;

/// All problems found in a configuration, one message per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.problems.join("\n"))
    }
}

impl std::error::Error for ConfigError {}

pub const KEYS: &[&str] = &[
    "nx",
    "ny",
    "lx",
    "ly",
    "m0",
    "chi",
    "tau",
    "ncoef",
    "rho",
    "kb",
    "temp",
    "kcoef",
    "alpha",
    "beta",
    "scheme",
    "step_mode",
    "dt",
    "dt_min",
    "dt_max",
    "mu",
    "lambda_table",
    "mu_temp_rescale",
    "slope_window",
    "t_end",
    "seed",
    "init_mean",
    "init_amp",
    "snapshot_times",
    "output_dir",
    "cg_tol",
    "cg_tol_mode",
    "cg_maxit",
    "newton_tol",
    "newton_maxit",
    "fd_eps",
    "band_lo",
    "band_hi",
    "band_policy",
    "check_stability",
    "bench_reference_dt",
    "bench_candidates",
    "bench_times",
];

fn parse_value<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("'{v}': {e}"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("'{v}': expected true or false")),
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_value::<f64>(s.trim())).collect()
}

/// `auto` or a number.
fn parse_auto<T: FromStr>(v: &str) -> Result<Option<T>, String>
where
    T::Err: fmt::Display,
{
    if v == "auto" {
        Ok(None)
    } else {
        parse_value(v).map(Some)
    }
}

fn parse_candidates(v: &str) -> Result<Vec<BenchPolicy>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| match s.trim() {
            "adaptive" => Ok(BenchPolicy::Adaptive),
            other => parse_value::<f64>(other.strip_prefix("dt=").unwrap_or(other))
                .map(BenchPolicy::Constant),
        })
        .collect()
}

fn apply(cfg: &mut RunConfig, band: &mut (Option<f64>, Option<f64>), key: &str, v: &str) -> Result<(), String> {
    let p = &mut cfg.params;
    let a = &mut cfg.adaptive;
    match key {
        "nx" => cfg.grid.nx = parse_value(v)?,
        "ny" => cfg.grid.ny = parse_value(v)?,
        "lx" => cfg.grid.lx = parse_value(v)?,
        "ly" => cfg.grid.ly = parse_value(v)?,
        "m0" => p.m0 = parse_value(v)?,
        "chi" => p.chi = parse_value(v)?,
        "tau" => p.tau = parse_value(v)?,
        "ncoef" => p.ncoef = parse_value(v)?,
        "rho" => p.rho = parse_value(v)?,
        "kb" => p.kb = parse_value(v)?,
        "temp" => p.temp = parse_value(v)?,
        "kcoef" => p.kcoef = parse_value(v)?,
        "alpha" => p.alpha = parse_value(v)?,
        "beta" => p.beta = parse_value(v)?,
        "scheme" => cfg.scheme = parse_value(v)?,
        "step_mode" => cfg.step_mode = parse_value::<StepMode>(v)?,
        "dt" => cfg.dt = parse_value(v)?,
        "dt_min" => a.dt_min = parse_value(v)?,
        "dt_max" => a.dt_max = parse_value(v)?,
        "mu" => a.mu = parse_value(v)?,
        "lambda_table" => a.lambda = LambdaSchedule::from_str(v).map_err(|e| e.to_string())?,
        "mu_temp_rescale" => cfg.mu_temp_rescale = parse_bool(v)?,
        "slope_window" => a.slope_window = parse_value(v)?,
        "t_end" => cfg.t_end = parse_value(v)?,
        "seed" => cfg.seed = parse_value(v)?,
        "init_mean" => cfg.init_mean = parse_value(v)?,
        "init_amp" => cfg.init_amp = parse_value(v)?,
        "snapshot_times" => cfg.snapshot_times = parse_list(v)?,
        "output_dir" => {
            if v.is_empty() {
                return Err("must not be empty".into());
            }
            cfg.output_dir = PathBuf::from(v);
        }
        "cg_tol" => cfg.solver.tol = parse_value(v)?,
        "cg_tol_mode" => cfg.solver.mode = parse_value::<ToleranceMode>(v)?,
        "cg_maxit" => cfg.solver.maxit = parse_auto(v)?,
        "newton_tol" => cfg.newton_tol = parse_value(v)?,
        "newton_maxit" => cfg.newton_maxit = parse_value(v)?,
        "fd_eps" => cfg.fd_eps = parse_value(v)?,
        "band_lo" => band.0 = parse_auto(v)?,
        "band_hi" => band.1 = parse_auto(v)?,
        "band_policy" => cfg.band_policy = parse_value(v)?,
        "check_stability" => cfg.check_stability = parse_bool(v)?,
        "bench_reference_dt" => cfg.bench.reference_dt = parse_value(v)?,
        "bench_candidates" => cfg.bench.candidates = parse_candidates(v)?,
        "bench_times" => cfg.bench.times = parse_list(v)?,
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

/// Parses configuration text on top of [`RunConfig::default`].
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut band: (Option<f64>, Option<f64>) = (None, None);
    let mut seen: Vec<(&str, usize)> = Vec::new();
    let mut problems = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let lineno = n + 1;
        let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            problems.push(format!("line {lineno}: expected 'key = value', got '{line}'"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if let Some(&(_, first)) = seen.iter().find(|(k, _)| *k == key) {
            problems.push(format!("line {lineno}: {key}: duplicate key (first set on line {first})"));
            continue;
        }
        match apply(&mut cfg, &mut band, key, value) {
            Ok(()) => seen.push((key, lineno)),
            Err(msg) => problems.push(format!("line {lineno}: {key}: {msg}")),
        }
    }

    match band {
        (None, None) => cfg.band = None,
        (Some(lo), Some(hi)) => cfg.band = Some((lo, hi)),
        _ => problems.push("band_lo/band_hi: set both or neither".into()),
    }

    if problems.is_empty() {
        problems.extend(cfg.problems());
    }
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { problems })
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

fn auto<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| v.to_string())
}

/// Prints every key of `cfg`; floats use the shortest round-trip form.
pub fn to_config_text(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let a = &cfg.adaptive;
    let candidates = cfg
        .bench
        .candidates
        .iter()
        .map(|c| match c {
            BenchPolicy::Constant(dt) => dt.to_string(),
            BenchPolicy::Adaptive => "adaptive".into(),
        })
        .collect::<Vec<_>>()
        .join(", ");
    let (band_lo, band_hi) = match cfg.band {
        Some((lo, hi)) => (Some(lo), Some(hi)),
        None => (None, None),
    };
    let lines = [
        ("nx", cfg.grid.nx.to_string()),
        ("ny", cfg.grid.ny.to_string()),
        ("lx", cfg.grid.lx.to_string()),
        ("ly", cfg.grid.ly.to_string()),
        ("m0", p.m0.to_string()),
        ("chi", p.chi.to_string()),
        ("tau", p.tau.to_string()),
        ("ncoef", p.ncoef.to_string()),
        ("rho", p.rho.to_string()),
        ("kb", p.kb.to_string()),
        ("temp", p.temp.to_string()),
        ("kcoef", p.kcoef.to_string()),
        ("alpha", p.alpha.to_string()),
        ("beta", p.beta.to_string()),
        ("scheme", cfg.scheme.to_string()),
        ("step_mode", cfg.step_mode.to_string()),
        ("dt", cfg.dt.to_string()),
        ("dt_min", a.dt_min.to_string()),
        ("dt_max", a.dt_max.to_string()),
        ("mu", a.mu.to_string()),
        ("lambda_table", a.lambda.to_string()),
        ("mu_temp_rescale", cfg.mu_temp_rescale.to_string()),
        ("slope_window", a.slope_window.to_string()),
        ("t_end", cfg.t_end.to_string()),
        ("seed", cfg.seed.to_string()),
        ("init_mean", cfg.init_mean.to_string()),
        ("init_amp", cfg.init_amp.to_string()),
        ("snapshot_times", join(&cfg.snapshot_times)),
        ("output_dir", cfg.output_dir.display().to_string()),
        ("cg_tol", cfg.solver.tol.to_string()),
        ("cg_tol_mode", cfg.solver.mode.to_string()),
        ("cg_maxit", auto(cfg.solver.maxit)),
        ("newton_tol", cfg.newton_tol.to_string()),
        ("newton_maxit", cfg.newton_maxit.to_string()),
        ("fd_eps", cfg.fd_eps.to_string()),
        ("band_lo", auto(band_lo)),
        ("band_hi", auto(band_hi)),
        ("band_policy", cfg.band_policy.to_string()),
        ("check_stability", cfg.check_stability.to_string()),
        ("bench_reference_dt", cfg.bench.reference_dt.to_string()),
        ("bench_candidates", candidates),
        ("bench_times", join(&cfg.bench.times)),
    ];
    debug_assert_eq!(lines.len(), KEYS.len());
    let mut out = String::new();
    for (k, v) in lines {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    }
    out
}
