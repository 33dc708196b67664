//! Time-step selection.
//!
//! The adaptive rule takes large steps while the total free energy is flat
//! and small ones while it drops quickly:
//!
//! ```text
//! Δt = max(Δt_min, λ(t) · Δt_max / sqrt(1 + μ |U'(t)|²))
//! ```
//!
//! `λ(t)` is a piecewise-constant schedule that loosens the step as the
//! system approaches equilibrium. `U'` is estimated from the logged energy.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Piecewise-constant `λ(t)`: entry `(bound, factor)` applies on
/// `(previous bound, bound]`, the first entry on `[0, bound]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSchedule {
    entries: Vec<(f64, f64)>,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        Self {
            entries: vec![
                (100.0, 1.0),
                (200.0, 1.5),
                (300.0, 2.0),
                (400.0, 3.0),
                (500.0, 4.0),
                (f64::INFINITY, 5.0),
            ],
        }
    }
}

impl LambdaSchedule {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        let Some(&(last, _)) = entries.last() else {
            return Err(Error::InvalidControl("lambda table is empty".into()));
        };
        if last != f64::INFINITY {
            return Err(Error::InvalidControl(
                "last lambda bound must be inf".into(),
            ));
        }
        if entries.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidControl(
                "lambda bounds must be strictly increasing".into(),
            ));
        }
        if let Some((_, f)) = entries.iter().find(|(_, f)| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidControl(format!(
                "lambda factors must be positive, got {f}"
            )));
        }
        Ok(Self { entries })
    }

    /// A single factor for all times.
    pub fn constant(factor: f64) -> Result<Self> {
        Self::new(vec![(f64::INFINITY, factor)])
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn at(&self, t: f64) -> f64 {
        self.entries
            .iter()
            .find(|(bound, _)| t <= *bound)
            .map_or(self.entries[self.entries.len() - 1].1, |e| e.1)
    }
}

impl fmt::Display for LambdaSchedule {
    /// `100:1, 200:1.5, ..., inf:5`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (bound, factor)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            if bound.is_infinite() {
                write!(f, "inf:{factor}")?;
            } else {
                write!(f, "{bound}:{factor}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for LambdaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for item in s.split(',') {
            let item = item.trim();
            let (b, f) = item.split_once(':').ok_or_else(|| {
                Error::InvalidControl(format!("expected 't_bound:factor', got '{item}'"))
            })?;
            let bound = match b.trim() {
                "inf" => f64::INFINITY,
                other => other.parse::<f64>().map_err(|e| {
                    Error::InvalidControl(format!("bad lambda bound '{other}': {e}"))
                })?,
            };
            let factor = f.trim().parse::<f64>().map_err(|e| {
                Error::InvalidControl(format!("bad lambda factor '{}': {e}", f.trim()))
            })?;
            entries.push((bound, factor));
        }
        Self::new(entries)
    }
}

/// Parameters of the energy-driven controller.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveControl {
    pub dt_min: f64,
    pub dt_max: f64,
    pub mu: f64,
    pub lambda: LambdaSchedule,
    /// Number of most recent energy slopes averaged into `U'`.
    pub slope_window: usize,
}

impl Default for AdaptiveControl {
    fn default() -> Self {
        Self {
            dt_min: 0.001,
            dt_max: 0.1,
            mu: 1000.0,
            lambda: LambdaSchedule::default(),
            slope_window: 1,
        }
    }
}

impl AdaptiveControl {
    /// Divides `μ` by `T²`, compensating the `T²` growth of `|U'|²`.
    pub fn with_mu_rescaled(mut self, temp: f64) -> Self {
        self.mu /= temp * temp;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepControl {
    Constant { dt: f64 },
    Adaptive(AdaptiveControl),
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Constant { dt: 0.001 }
    }
}

impl StepControl {
    pub fn check(&self) -> Result<()> {
        match self {
            StepControl::Constant { dt } => {
                if !(dt.is_finite() && *dt > 0.0) {
                    return Err(Error::InvalidControl(format!("dt must be positive, got {dt}")));
                }
            }
            StepControl::Adaptive(a) => {
                if !(a.dt_min > 0.0 && a.dt_min <= a.dt_max && a.dt_max.is_finite()) {
                    return Err(Error::InvalidControl(format!(
                        "need 0 < dt_min <= dt_max, got {} and {}",
                        a.dt_min, a.dt_max
                    )));
                }
                if !(a.mu >= 0.0 && a.mu.is_finite()) {
                    return Err(Error::InvalidControl(format!("mu must be >= 0, got {}", a.mu)));
                }
                if a.slope_window == 0 {
                    return Err(Error::InvalidControl("slope_window must be >= 1".into()));
                }
                LambdaSchedule::new(a.lambda.entries.clone())?;
            }
        }
        Ok(())
    }
}

/// `λ(t)` of an adaptive controller; `1` for constant stepping.
pub fn lambda_at(t: f64, ctrl: &StepControl) -> f64 {
    match ctrl {
        StepControl::Constant { .. } => 1.0,
        StepControl::Adaptive(a) => a.lambda.at(t),
    }
}

/// Recent `(t, U)` samples, oldest first.
#[derive(Debug, Clone, Default)]
pub struct EnergyHistory {
    samples: VecDeque<(f64, f64)>,
    capacity: usize,
}

impl EnergyHistory {
    /// Keeps the last `window + 1` samples, enough for `window` slopes.
    pub fn new(window: usize) -> Self {
        Self {
            samples: VecDeque::with_capacity(window + 1),
            capacity: window.max(1) + 1,
        }
    }

    /// Appends a sample; times must increase strictly.
    pub fn push(&mut self, t: f64, u: f64) -> Result<()> {
        if let Some(&(last, _)) = self.samples.back() {
            if !(t > last) {
                return Err(Error::InvalidControl(format!(
                    "energy history times must increase: {t} after {last}"
                )));
            }
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back((t, u));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Backward-difference estimate of `U'`, averaged over the stored slopes.
/// `None` until two samples exist.
pub fn estimate_uprime(h: &EnergyHistory) -> Option<f64> {
    if h.samples.len() < 2 {
        return None;
    }
    let slopes = h.samples.len() - 1;
    let sum: f64 = h
        .samples
        .iter()
        .zip(h.samples.iter().skip(1))
        .map(|(&(t0, u0), &(t1, u1))| (u1 - u0) / (t1 - t0))
        .sum();
    Some(sum / slopes as f64)
}

/// The adaptive step for time `t` and energy slope `uprime`.
pub fn next_dt(t: f64, uprime: f64, ctrl: &AdaptiveControl) -> f64 {
    let fraction = ctrl.lambda.at(t) * ctrl.dt_max / (1.0 + ctrl.mu * uprime * uprime).sqrt();
    ctrl.dt_min.max(fraction)
}

/// Shortens `dt` so the step lands on the first event in `(t, t + dt]`.
///
/// An event exactly at `t` counts as already handled. Events closer than a
/// relative `1e-9 · dt` beyond `t + dt` are also snapped to, which avoids
/// leaving rounding-sized slivers before an event.
pub fn snap_to_events(dt: f64, t: f64, event_times: &[f64]) -> f64 {
    let reach = t + dt * (1.0 + 1e-9);
    match event_times.iter().find(|&&e| e > t) {
        Some(&e) if e <= reach => e - t,
        _ => dt,
    }
}

/// Step-size policy state owned by a single run.
#[derive(Debug, Clone)]
pub struct Stepper {
    control: StepControl,
    history: EnergyHistory,
}

impl Stepper {
    pub fn new(control: StepControl) -> Result<Self> {
        control.check()?;
        let window = match &control {
            StepControl::Adaptive(a) => a.slope_window,
            StepControl::Constant { .. } => 1,
        };
        Ok(Self {
            control,
            history: EnergyHistory::new(window),
        })
    }

    pub fn control(&self) -> &StepControl {
        &self.control
    }

    /// Records the energy reached at time `t`.
    pub fn record(&mut self, t: f64, energy: f64) -> Result<()> {
        self.history.push(t, energy)
    }

    /// Step proposed for time `t` before event snapping. The adaptive mode
    /// uses `Δt_min` until an energy slope is available.
    pub fn propose(&self, t: f64) -> f64 {
        match &self.control {
            StepControl::Constant { dt } => *dt,
            StepControl::Adaptive(a) => match estimate_uprime(&self.history) {
                None => a.dt_min,
                Some(up) => next_dt(t, up, a),
            },
        }
    }
}
