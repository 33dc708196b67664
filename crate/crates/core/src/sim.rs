//! Simulation driver: seeded initial data, the time loop coupling a scheme
//! with a step policy, per-step energy logging, snapshots at requested
//! times, and the accuracy/efficiency benchmark.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{self, Field2D, Grid2D};
use crate::linsolve::SolverOptions;
use crate::physics::{self, AdmissibleBand, SimParams};
use crate::schemes::{self, BandPolicy, SchemeKind, StepOptions};
use crate::stepper::{snap_to_events, AdaptiveControl, StepControl, Stepper};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nx: 64,
            ny: 64,
            lx: std::f64::consts::TAU,
            ly: std::f64::consts::TAU,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid2D> {
        Grid2D::new(self.nx, self.ny, self.lx, self.ly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Constant,
    Adaptive,
}

impl fmt::Display for StepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepMode::Constant => "constant",
            StepMode::Adaptive => "adaptive",
        })
    }
}

impl std::str::FromStr for StepMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant" => Ok(Self::Constant),
            "adaptive" => Ok(Self::Adaptive),
            other => Err(format!("unknown step mode '{other}' (constant|adaptive)")),
        }
    }
}

/// A step policy compared by [`bench`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchPolicy {
    Constant(f64),
    /// The adaptive controller of the enclosing [`RunConfig`].
    Adaptive,
}

impl fmt::Display for BenchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchPolicy::Constant(dt) => write!(f, "dt={dt}"),
            BenchPolicy::Adaptive => f.write_str("adaptive"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    /// Constant step of the reference ("exact") run.
    pub reference_dt: f64,
    pub candidates: Vec<BenchPolicy>,
    /// Times at which candidates are compared with the reference.
    pub times: Vec<f64>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            reference_dt: 1e-4,
            candidates: vec![
                BenchPolicy::Constant(0.05),
                BenchPolicy::Constant(0.01),
                BenchPolicy::Constant(0.005),
                BenchPolicy::Constant(0.001),
                BenchPolicy::Adaptive,
            ],
            times: vec![1.0, 10.0, 100.0, 200.0],
        }
    }
}

/// Complete description of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: SimParams,
    pub scheme: SchemeKind,
    pub step_mode: StepMode,
    /// Step of the constant policy.
    pub dt: f64,
    pub adaptive: AdaptiveControl,
    /// Divide the adaptive `μ` by `T²`.
    pub mu_temp_rescale: bool,
    pub t_end: f64,
    pub seed: u64,
    pub init_mean: f64,
    pub init_amp: f64,
    /// Extra snapshot times; `0` and `t_end` are always written.
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub solver: SolverOptions,
    pub newton_tol: f64,
    pub newton_maxit: usize,
    pub fd_eps: f64,
    /// Admissible band; `None` selects `(1e-4, 1/ρ - 1e-4)`.
    pub band: Option<(f64, f64)>,
    pub band_policy: BandPolicy,
    pub check_stability: bool,
    pub bench: BenchSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            params: SimParams::default(),
            scheme: SchemeKind::Linear,
            step_mode: StepMode::Constant,
            dt: 0.001,
            adaptive: AdaptiveControl::default(),
            mu_temp_rescale: false,
            t_end: 1.0,
            seed: 42,
            init_mean: 0.65,
            init_amp: 0.05,
            snapshot_times: Vec::new(),
            output_dir: PathBuf::from("out"),
            solver: SolverOptions::default(),
            newton_tol: 1e-8,
            newton_maxit: 50,
            fd_eps: 1e-6,
            band: None,
            band_policy: BandPolicy::Strict,
            check_stability: cfg!(debug_assertions),
            bench: BenchSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn admissible_band(&self) -> Result<AdmissibleBand> {
        match self.band {
            None => Ok(AdmissibleBand::for_params(&self.params)),
            Some((lo, hi)) => AdmissibleBand::new(lo, hi, &self.params),
        }
    }

    pub fn step_options(&self) -> Result<StepOptions> {
        Ok(StepOptions {
            solver: self.solver,
            newton_tol: self.newton_tol,
            newton_maxit: self.newton_maxit,
            fd_eps: self.fd_eps,
            band: self.admissible_band()?,
            band_policy: self.band_policy,
            check_stability: self.check_stability,
        })
    }

    /// The step policy selected by `step_mode`.
    pub fn control(&self) -> StepControl {
        match self.step_mode {
            StepMode::Constant => StepControl::Constant { dt: self.dt },
            StepMode::Adaptive => StepControl::Adaptive(self.adaptive_control()),
        }
    }

    fn adaptive_control(&self) -> AdaptiveControl {
        if self.mu_temp_rescale {
            self.adaptive.clone().with_mu_rescaled(self.params.temp)
        } else {
            self.adaptive.clone()
        }
    }

    /// Same run with another step policy.
    pub fn with_policy(&self, policy: BenchPolicy) -> RunConfig {
        let mut c = self.clone();
        match policy {
            BenchPolicy::Constant(dt) => {
                c.step_mode = StepMode::Constant;
                c.dt = dt;
            }
            BenchPolicy::Adaptive => c.step_mode = StepMode::Adaptive,
        }
        c
    }

    /// Every violated invariant, each message naming its key.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.grid.build() {
            out.push(format!("nx/ny/lx/ly: {e}"));
        }
        if let Err(e) = self.params.check() {
            out.push(e.to_string());
        }
        if let Err(e) = (StepControl::Constant { dt: self.dt }).check() {
            out.push(format!("dt: {e}"));
        }
        if let Err(e) = StepControl::Adaptive(self.adaptive.clone()).check() {
            out.push(format!("dt_min/dt_max/mu/lambda_table/slope_window: {e}"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            out.push(format!("t_end: must be >= 0, got {}", self.t_end));
        }
        if !(self.init_amp.is_finite() && self.init_amp >= 0.0) {
            out.push(format!("init_amp: must be >= 0, got {}", self.init_amp));
        }
        match self.admissible_band() {
            Err(e) => out.push(format!("band_lo/band_hi: {e}")),
            Ok(band) => {
                let (lo, hi) = (self.init_mean - self.init_amp, self.init_mean + self.init_amp);
                if !(band.contains(lo) && band.contains(hi)) {
                    out.push(format!(
                        "init_mean/init_amp: [{lo}, {hi}] not inside band ({}, {})",
                        band.lo(),
                        band.hi()
                    ));
                }
            }
        }
        if self.snapshot_times.iter().any(|&t| !(t >= 0.0 && t <= self.t_end)) {
            out.push(format!("snapshot_times: all times must lie in [0, {}]", self.t_end));
        }
        if self.snapshot_times.windows(2).any(|w| !(w[0] < w[1])) {
            out.push("snapshot_times: must be strictly increasing".into());
        }
        if !(self.solver.tol > 0.0) {
            out.push(format!("cg_tol: must be positive, got {}", self.solver.tol));
        }
        if self.solver.maxit == Some(0) {
            out.push("cg_maxit: must be >= 1 (omit for the default)".into());
        }
        if !(self.newton_tol > 0.0) {
            out.push(format!("newton_tol: must be positive, got {}", self.newton_tol));
        }
        if self.newton_maxit == 0 {
            out.push("newton_maxit: must be >= 1".into());
        }
        if !(self.fd_eps > 0.0) {
            out.push(format!("fd_eps: must be positive, got {}", self.fd_eps));
        }
        if !(self.bench.reference_dt > 0.0) {
            out.push(format!(
                "bench_reference_dt: must be positive, got {}",
                self.bench.reference_dt
            ));
        }
        if self
            .bench
            .candidates
            .iter()
            .any(|c| matches!(c, BenchPolicy::Constant(dt) if !(*dt > 0.0)))
        {
            out.push("bench_candidates: constant steps must be positive".into());
        }
        if self.bench.times.windows(2).any(|w| !(w[0] < w[1]))
            || self.bench.times.iter().any(|&t| !(t > 0.0))
        {
            out.push("bench_times: must be positive and strictly increasing".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(p.join("; ")))
        }
    }
}

/// One row of the energy log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// Step that produced this row; `0` for the initial row.
    pub dt: f64,
    pub u: f64,
    pub u_per_volume: f64,
    pub l2_norm: f64,
    pub mean_phi: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    pub cg_iters: usize,
    pub newton_iters: usize,
    pub fallback: bool,
}

impl EnergyRecord {
    fn observe(t: f64, dt: f64, f: &Field2D, u: f64) -> Self {
        Self {
            t,
            dt,
            u,
            u_per_volume: u / f.grid().area(),
            l2_norm: grid::l2_norm(f),
            mean_phi: grid::mean(f),
            min_phi: f.min(),
            max_phi: f.max(),
            cg_iters: 0,
            newton_iters: 0,
            fallback: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_field: Field2D,
    pub log: Vec<EnergyRecord>,
    /// `(t, φ)` at 0, the requested snapshot times and `t_end`.
    pub snapshots: Vec<(f64, Field2D)>,
}

impl RunOutput {
    pub fn steps(&self) -> usize {
        self.log.len().saturating_sub(1)
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Field2D> {
        self.snapshots.iter().find(|(s, _)| *s == t).map(|(_, f)| f)
    }
}

/// A step failed mid-run.
pub struct RunFailure {
    pub error: Error,
    /// Time of the last accepted state.
    pub t: f64,
    /// Step size of the failed attempt.
    pub dt: f64,
    pub last_good: Field2D,
    pub log: Vec<EnergyRecord>,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step from t = {} with dt = {} failed after {} steps: {}",
            self.t,
            self.dt,
            self.log.len().saturating_sub(1),
            self.error
        )
    }
}

impl fmt::Debug for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunFailure")
            .field("error", &self.error)
            .field("t", &self.t)
            .field("dt", &self.dt)
            .field("last_good", &format_args!("<{}x{} field>", self.last_good.grid().nx(), self.last_good.grid().ny()))
            .field("steps", &self.log.len().saturating_sub(1))
            .finish()
    }
}

impl std::error::Error for RunFailure {}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(Error),
    #[error("{0}")]
    Step(Box<RunFailure>),
}

/// Uniform noise `mean + amp · u`, `u ~ U[-1, 1)` from a seeded ChaCha8
/// stream, then shifted so the discrete mean is exactly `mean`.
pub fn init_field(grid: Grid2D, mean: f64, amp: f64, seed: u64, band: &AdmissibleBand) -> Result<Field2D> {
    if !(band.contains(mean - amp) && band.contains(mean + amp)) {
        return Err(Error::InvalidParams(format!(
            "initial range [{}, {}] leaves the admissible band ({}, {})",
            mean - amp,
            mean + amp,
            band.lo(),
            band.hi()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..grid.len())
        .map(|_| {
            // 53 random mantissa bits mapped onto [-1, 1)
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            mean + amp * (2.0 * u - 1.0)
        })
        .collect();
    let drift = values.iter().sum::<f64>() / values.len() as f64 - mean;
    for v in &mut values {
        *v -= drift;
    }
    let f = Field2D::new(grid, values)?;
    band.check_field(&f)?;
    Ok(f)
}

/// Runs `cfg` from its seeded random initial field.
pub fn run(cfg: &RunConfig) -> std::result::Result<RunOutput, RunError> {
    cfg.validate().map_err(RunError::Config)?;
    let grid = cfg.grid.build().map_err(RunError::Config)?;
    let band = cfg.admissible_band().map_err(RunError::Config)?;
    let phi0 = init_field(grid, cfg.init_mean, cfg.init_amp, cfg.seed, &band).map_err(RunError::Config)?;
    run_from(cfg, phi0)
}

/// Runs `cfg` from the given initial field.
pub fn run_from(cfg: &RunConfig, phi0: Field2D) -> std::result::Result<RunOutput, RunError> {
    cfg.validate().map_err(RunError::Config)?;
    if *phi0.grid() != cfg.grid.build().map_err(RunError::Config)? {
        return Err(RunError::Config(Error::GridMismatch));
    }
    let opts = cfg.step_options().map_err(RunError::Config)?;
    opts.band.check_field(&phi0).map_err(RunError::Config)?;
    let p = cfg.params;
    let mut stepper = Stepper::new(cfg.control()).map_err(RunError::Config)?;

    let mut events: Vec<f64> = cfg.snapshot_times.iter().copied().filter(|&t| t > 0.0).collect();
    if cfg.t_end > 0.0 && events.last() != Some(&cfg.t_end) {
        events.push(cfg.t_end);
    }

    let u0 = physics::total_energy_unchecked(&phi0, &p);
    let mut log = vec![EnergyRecord::observe(0.0, 0.0, &phi0, u0)];
    let mut snapshots = vec![(0.0, phi0.clone())];
    stepper.record(0.0, u0).expect("first sample");

    let mut phi = phi0;
    let mut t = 0.0;
    // constant steps are counted from the last event, so times are
    // `start + k dt` and never accumulate rounding into sliver steps
    let (mut seg_start, mut seg_steps) = (0.0, 0u64);
    while t < cfg.t_end {
        let proposed = stepper.propose(t);
        let reach = match cfg.step_mode {
            StepMode::Constant => seg_start + (seg_steps + 1) as f64 * proposed,
            StepMode::Adaptive => t + proposed,
        };
        // land exactly on the event when snapping shortened (or hit) the step
        let t_next = match events.iter().find(|&&e| e > t) {
            Some(&e) if snap_to_events(reach - t, t, &events) < reach - t || e <= reach => e,
            _ => reach,
        };
        if events.contains(&t_next) {
            (seg_start, seg_steps) = (t_next, 0);
        } else {
            seg_steps += 1;
        }
        let dt = t_next - t;

        let (next, report) = match schemes::step(cfg.scheme, &phi, dt, &p, &opts) {
            Ok(out) => out,
            Err(error) => {
                return Err(RunError::Step(Box::new(RunFailure {
                    error,
                    t,
                    dt,
                    last_good: phi,
                    log,
                })))
            }
        };
        if report.clamped_nodes > 0 {
            eprintln!(
                "warning: t = {t_next}: clamped {} nodes into the admissible band",
                report.clamped_nodes
            );
        }
        phi = next;
        t = t_next;
        let mut rec = EnergyRecord::observe(t, dt, &phi, report.energy_after);
        rec.cg_iters = report.solver.iterations;
        rec.newton_iters = report.newton_iterations;
        rec.fallback = report.solver.fallback_used;
        log.push(rec);
        stepper.record(t, report.energy_after).expect("time advances");
        if cfg.snapshot_times.contains(&t) || t == cfg.t_end {
            snapshots.push((t, phi.clone()));
        }
    }
    Ok(RunOutput {
        final_field: phi,
        log,
        snapshots,
    })
}

/// `sqrt(Σ (a - b)² hx hy)`: the weighted L² distance between two
/// solutions, called "relative error" in the benchmark tables.
pub fn relative_error(a: &Field2D, b: &Field2D) -> Result<f64> {
    Ok(grid::l2_norm(&a.sub(b)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub policy: String,
    pub steps: Option<usize>,
    pub wall_seconds: f64,
    /// Error against the reference at each comparison time; `None` when the
    /// time lies beyond `t_end` or the run failed.
    pub errors: Vec<Option<f64>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub times: Vec<f64>,
    pub reference: BenchRow,
    pub rows: Vec<BenchRow>,
}

fn timed_run(cfg: &RunConfig, phi0: &Field2D) -> (std::result::Result<RunOutput, RunError>, f64) {
    let start = Instant::now();
    let out = run_from(cfg, phi0.clone());
    (out, start.elapsed().as_secs_f64())
}

/// Runs the reference policy, then every candidate (concurrently) from the
/// same initial field, and tabulates steps, wall time and the error against
/// the reference at `cfg.bench.times`.
pub fn bench(cfg: &RunConfig) -> std::result::Result<BenchTable, RunError> {
    cfg.validate().map_err(RunError::Config)?;
    let grid = cfg.grid.build().map_err(RunError::Config)?;
    let band = cfg.admissible_band().map_err(RunError::Config)?;
    let phi0 = init_field(grid, cfg.init_mean, cfg.init_amp, cfg.seed, &band).map_err(RunError::Config)?;

    let times = cfg.bench.times.clone();
    let mut base = cfg.clone();
    base.snapshot_times = times.iter().copied().filter(|&t| t <= cfg.t_end).collect();

    let ref_cfg = base.with_policy(BenchPolicy::Constant(cfg.bench.reference_dt));
    let (reference, ref_wall) = timed_run(&ref_cfg, &phi0);
    let reference = reference?;

    let rows = cfg
        .bench
        .candidates
        .par_iter()
        .map(|&policy| {
            let (out, wall) = timed_run(&base.with_policy(policy), &phi0);
            match out {
                Ok(out) => BenchRow {
                    policy: policy.to_string(),
                    steps: Some(out.steps()),
                    wall_seconds: wall,
                    errors: times
                        .iter()
                        .map(|&t| {
                            let a = out.snapshot_at(t)?;
                            let b = reference.snapshot_at(t)?;
                            relative_error(a, b).ok()
                        })
                        .collect(),
                    failure: None,
                },
                Err(e) => BenchRow {
                    policy: policy.to_string(),
                    steps: None,
                    wall_seconds: wall,
                    errors: vec![None; times.len()],
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();

    Ok(BenchTable {
        reference: BenchRow {
            policy: BenchPolicy::Constant(cfg.bench.reference_dt).to_string(),
            steps: Some(reference.steps()),
            wall_seconds: ref_wall,
            errors: times
                .iter()
                .map(|&t| reference.snapshot_at(t).map(|_| 0.0))
                .collect(),
            failure: None,
        },
        times,
        rows,
    })
}
