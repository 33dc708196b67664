//! One time step of the two semi-implicit schemes for
//!
//! ```text
//! φ_t = M₀ G'(φ) |∇φ|² + M₀ G(φ) Δφ - 2 M₀ k_B T K Δ²φ
//! ```
//!
//! * [`SchemeKind::Linear`]: coefficients `G(φⁿ)`, `G'(φⁿ)∇φⁿ` frozen at the
//!   old level, every derivative of the unknown averaged between levels.
//!   One linear solve per step.
//! * [`SchemeKind::Nonlinear`]: coefficients at the midpoint
//!   `(φⁿ + φⁿ⁺¹)/2`, solved by matrix-free Newton.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{self, diff_x_into, diff_y_into, l2_norm, laplacian_into, Field2D, Grid2D};
use crate::linsolve::{self, jacobian_vector, LinearOperator, SolveStats, SolverOptions};
use crate::physics::{self, AdmissibleBand, SimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Linear,
    Nonlinear,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Linear => "linear",
            SchemeKind::Nonlinear => "nonlinear",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(Self::Linear),
            "nonlinear" => Ok(Self::Nonlinear),
            other => Err(format!("unknown scheme '{other}' (linear|nonlinear)")),
        }
    }
}

/// What to do when a new iterate leaves the admissible band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandPolicy {
    /// Fail the step.
    Strict,
    /// Project offending nodes just inside the band edges.
    Clamp,
}

impl fmt::Display for BandPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandPolicy::Strict => "strict",
            BandPolicy::Clamp => "clamp",
        })
    }
}

impl FromStr for BandPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "strict" => Ok(Self::Strict),
            "clamp" => Ok(Self::Clamp),
            other => Err(format!("unknown band policy '{other}' (strict|clamp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub solver: SolverOptions,
    pub newton_tol: f64,
    pub newton_maxit: usize,
    /// Relative step of the finite-difference Jacobian.
    pub fd_eps: f64,
    pub band: AdmissibleBand,
    pub band_policy: BandPolicy,
    /// Fail the step if the L² norm grows by more than [`STABILITY_SLACK`].
    pub check_stability: bool,
}

/// Allowed growth of `‖φ‖_h` per step before the stability check trips.
pub const STABILITY_SLACK: f64 = 1e-12;

impl StepOptions {
    pub fn for_params(p: &SimParams) -> Self {
        Self {
            solver: SolverOptions::default(),
            newton_tol: 1e-8,
            newton_maxit: 50,
            fd_eps: 1e-6,
            band: AdmissibleBand::for_params(p),
            band_policy: BandPolicy::Strict,
            check_stability: cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Linear-solver statistics (summed over Newton iterations).
    pub solver: SolveStats,
    pub newton_iterations: usize,
    /// `‖R‖_h` before each Newton update and after the last one.
    pub newton_residuals: Vec<f64>,
    pub l2_before: f64,
    pub l2_after: f64,
    pub energy_after: f64,
    /// Nodes moved back into the band under [`BandPolicy::Clamp`].
    pub clamped_nodes: usize,
}

/// The frozen-coefficient operator of the linear scheme,
///
/// ```text
/// A v = v/Δt - (M₀/2) G'(φⁿ) ∇φⁿ·∇v - (M₀/2) G(φⁿ) Δv + M₀ k_B T K Δ²v.
/// ```
#[derive(Debug, Clone)]
pub struct LinearSchemeOperator {
    grid: Grid2D,
    inv_dt: f64,
    /// `(M₀/2) G'(φⁿ) ∂xφⁿ` and `(M₀/2) G'(φⁿ) ∂yφⁿ`.
    adv_x: Vec<f64>,
    adv_y: Vec<f64>,
    /// `(M₀/2) G(φⁿ)`.
    diff: Vec<f64>,
    bih: f64,
}

impl LinearSchemeOperator {
    /// Freezes the coefficients at `phi_n`. Values must lie in `(0, 1/ρ)`.
    pub fn new(phi_n: &Field2D, dt: f64, p: &SimParams) -> Self {
        let grid = *phi_n.grid();
        let n = grid.len();
        let half_m0 = 0.5 * p.m0;
        let mut dx = vec![0.0; n];
        let mut dy = vec![0.0; n];
        diff_x_into(&grid, phi_n.values(), &mut dx);
        diff_y_into(&grid, phi_n.values(), &mut dy);
        let mut diff = Vec::with_capacity(n);
        for (k, &phi) in phi_n.values().iter().enumerate() {
            let gp = half_m0 * physics::g_prime_unchecked(phi, p);
            dx[k] *= gp;
            dy[k] *= gp;
            diff.push(half_m0 * physics::g_unchecked(phi, p));
        }
        Self {
            grid,
            inv_dt: 1.0 / dt,
            adv_x: dx,
            adv_y: dy,
            diff,
            bih: p.biharmonic_coef(),
        }
    }

    /// Right-hand side
    /// `φⁿ/Δt + (M₀/2) G'|∇φⁿ|² + (M₀/2) G Δφⁿ - M₀ k_B T K Δ²φⁿ`.
    pub fn rhs(&self, phi_n: &Field2D) -> Field2D {
        let g = self.grid;
        let n = g.len();
        let src = phi_n.values();
        let mut dx = vec![0.0; n];
        let mut dy = vec![0.0; n];
        let mut lap = vec![0.0; n];
        let mut bih = vec![0.0; n];
        diff_x_into(&g, src, &mut dx);
        diff_y_into(&g, src, &mut dy);
        laplacian_into(&g, src, &mut lap);
        laplacian_into(&g, &lap, &mut bih);
        let out = (0..n)
            .map(|k| {
                src[k] * self.inv_dt
                    + self.adv_x[k] * dx[k]
                    + self.adv_y[k] * dy[k]
                    + self.diff[k] * lap[k]
                    - self.bih * bih[k]
            })
            .collect();
        Field2D::from_vec(g, out)
    }

    /// The adjoint of this operator under the discrete inner product.
    pub fn transpose(&self) -> LinearSchemeTranspose<'_> {
        LinearSchemeTranspose(self)
    }
}

impl LinearOperator for LinearSchemeOperator {
    fn apply_into(&self, x: &Field2D, out: &mut Field2D) {
        let g = self.grid;
        let n = g.len();
        let src = x.values();
        let mut dx = vec![0.0; n];
        let mut dy = vec![0.0; n];
        let mut lap = vec![0.0; n];
        let mut bih = vec![0.0; n];
        diff_x_into(&g, src, &mut dx);
        diff_y_into(&g, src, &mut dy);
        laplacian_into(&g, src, &mut lap);
        laplacian_into(&g, &lap, &mut bih);
        for (k, o) in out.values_mut().iter_mut().enumerate() {
            *o = src[k] * self.inv_dt
                - self.adv_x[k] * dx[k]
                - self.adv_y[k] * dy[k]
                - self.diff[k] * lap[k]
                + self.bih * bih[k];
        }
    }
}

/// `Aᵀ w = w/Δt + ∂x(a_x w) + ∂y(a_y w) - Δ(d w) + M₀ k_B T K Δ²w`.
///
/// Central differences are skew-adjoint and the Laplacian self-adjoint on the
/// periodic grid, which gives the signs above.
pub struct LinearSchemeTranspose<'a>(&'a LinearSchemeOperator);

impl LinearOperator for LinearSchemeTranspose<'_> {
    fn apply_into(&self, x: &Field2D, out: &mut Field2D) {
        let op = self.0;
        let g = op.grid;
        let n = g.len();
        let src = x.values();
        let ax: Vec<f64> = (0..n).map(|k| op.adv_x[k] * src[k]).collect();
        let ay: Vec<f64> = (0..n).map(|k| op.adv_y[k] * src[k]).collect();
        let dw: Vec<f64> = (0..n).map(|k| op.diff[k] * src[k]).collect();
        let mut dax = vec![0.0; n];
        let mut day = vec![0.0; n];
        let mut ldw = vec![0.0; n];
        let mut lap = vec![0.0; n];
        let mut bih = vec![0.0; n];
        diff_x_into(&g, &ax, &mut dax);
        diff_y_into(&g, &ay, &mut day);
        laplacian_into(&g, &dw, &mut ldw);
        laplacian_into(&g, src, &mut lap);
        laplacian_into(&g, &lap, &mut bih);
        for (k, o) in out.values_mut().iter_mut().enumerate() {
            *o = src[k] * op.inv_dt + dax[k] + day[k] - ldw[k] + op.bih * bih[k];
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("time step must be positive, got {dt}")))
    }
}

/// Applies the band policy to a freshly computed level.
fn enforce_band(f: &mut Field2D, opts: &StepOptions) -> Result<usize> {
    match opts.band_policy {
        BandPolicy::Strict => opts.band.check_field(f).map(|_| 0),
        BandPolicy::Clamp => {
            let lo = opts.band.lo().next_up();
            let hi = opts.band.hi().next_down();
            let mut n = 0;
            for v in f.values_mut() {
                if !opts.band.contains(*v) {
                    *v = v.clamp(lo, hi);
                    n += 1;
                }
            }
            Ok(n)
        }
    }
}

fn finish(
    mut next: Field2D,
    l2_before: f64,
    solver: SolveStats,
    newton_iterations: usize,
    newton_residuals: Vec<f64>,
    p: &SimParams,
    opts: &StepOptions,
) -> Result<(Field2D, StepReport)> {
    next.check_finite()?;
    let clamped_nodes = enforce_band(&mut next, opts)?;
    let l2_after = l2_norm(&next);
    if opts.check_stability && l2_after > l2_before + STABILITY_SLACK {
        return Err(Error::StabilityViolated {
            before: l2_before,
            after: l2_after,
        });
    }
    let energy_after = physics::total_energy_unchecked(&next, p);
    Ok((
        next,
        StepReport {
            solver,
            newton_iterations,
            newton_residuals,
            l2_before,
            l2_after,
            energy_after,
            clamped_nodes,
        },
    ))
}

/// Advances `phi_n` by one step of the linear scheme.
pub fn linear_step(
    phi_n: &Field2D,
    dt: f64,
    p: &SimParams,
    opts: &StepOptions,
) -> Result<(Field2D, StepReport)> {
    check_dt(dt)?;
    opts.band.check_field(phi_n)?;
    let op = LinearSchemeOperator::new(phi_n, dt, p);
    let b = op.rhs(phi_n);
    let (next, stats) = linsolve::solve(&op, Some(&op.transpose()), &b, phi_n, &opts.solver)?;
    finish(next, l2_norm(phi_n), stats, 0, Vec::new(), p, opts)
}

/// Residual of the nonlinear scheme,
///
/// ```text
/// R = (φⁿ⁺¹ - φⁿ)/Δt - M₀ G'(m)|∇m|² - M₀ G(m) (Δφⁿ + Δφⁿ⁺¹)/2
///     + M₀ k_B T K (Δ²φⁿ⁺¹ + Δ²φⁿ),     m = (φⁿ + φⁿ⁺¹)/2.
/// ```
pub fn nonlinear_residual(
    phi_next: &Field2D,
    phi_n: &Field2D,
    dt: f64,
    p: &SimParams,
) -> Result<Field2D> {
    check_dt(dt)?;
    if phi_next.grid() != phi_n.grid() {
        return Err(Error::GridMismatch);
    }
    let g = *phi_n.grid();
    let n = g.len();
    let hi = p.phi_max();
    let mid: Vec<f64> = phi_n
        .values()
        .iter()
        .zip(phi_next.values())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    for (what, vals) in [
        ("nonlinear residual (phi_n)", phi_n.values()),
        ("nonlinear residual (phi_next)", phi_next.values()),
        ("nonlinear residual (midpoint)", &mid[..]),
    ] {
        if let Some(&bad) = vals.iter().find(|&&v| !(v > 0.0 && v < hi)) {
            return Err(Error::Domain {
                what,
                phi: bad,
                lo: 0.0,
                hi,
            });
        }
    }

    let mut mdx = vec![0.0; n];
    let mut mdy = vec![0.0; n];
    diff_x_into(&g, &mid, &mut mdx);
    diff_y_into(&g, &mid, &mut mdy);
    // Δ and Δ² are linear: apply them once to the endpoint sum
    let sum: Vec<f64> = phi_n
        .values()
        .iter()
        .zip(phi_next.values())
        .map(|(a, b)| a + b)
        .collect();
    let mut lap = vec![0.0; n];
    let mut bih = vec![0.0; n];
    laplacian_into(&g, &sum, &mut lap);
    laplacian_into(&g, &lap, &mut bih);

    let inv_dt = 1.0 / dt;
    let bc = p.biharmonic_coef();
    let out = (0..n)
        .map(|k| {
            let m = mid[k];
            let grad2 = mdx[k] * mdx[k] + mdy[k] * mdy[k];
            (phi_next.values()[k] - phi_n.values()[k]) * inv_dt
                - p.m0 * physics::g_prime_unchecked(m, p) * grad2
                - p.m0 * physics::g_unchecked(m, p) * 0.5 * lap[k]
                + bc * bih[k]
        })
        .collect();
    Ok(Field2D::from_vec(g, out))
}

/// Advances `phi_n` by one step of the nonlinear scheme using Newton's
/// method from the initial guess `phi_n`.
pub fn nonlinear_step(
    phi_n: &Field2D,
    dt: f64,
    p: &SimParams,
    opts: &StepOptions,
) -> Result<(Field2D, StepReport)> {
    check_dt(dt)?;
    opts.band.check_field(phi_n)?;
    let residual = |x: &Field2D| nonlinear_residual(x, phi_n, dt, p);

    let mut x = phi_n.clone();
    let mut r = residual(&x)?;
    let mut rnorm = l2_norm(&r);
    let mut history = vec![rnorm];
    let mut stats = SolveStats {
        converged: true,
        ..SolveStats::default()
    };
    let mut iterations = 0;
    while rnorm > opts.newton_tol {
        if iterations == opts.newton_maxit {
            return Err(Error::NewtonFailed {
                iterations,
                residual: rnorm,
            });
        }
        let x_ref = &x;
        let jac = linsolve::FnOperator::new(|v: &Field2D| {
            jacobian_vector(residual, x_ref, v, opts.fd_eps)
                .unwrap_or_else(|_| Field2D::constant(*v.grid(), f64::NAN))
        });
        // forcing term min(1e-2, ‖R‖)·‖R‖ keeps the outer convergence quadratic
        let inner = SolverOptions {
            tol: (rnorm.min(1e-2) * rnorm).max(0.1 * opts.newton_tol),
            mode: linsolve::ToleranceMode::Absolute,
            maxit: opts.solver.maxit,
        };
        let minus_r = r.scale(-1.0);
        let (delta, s) = linsolve::solve(&jac, None, &minus_r, &Field2D::zeros(*x.grid()), &inner)?;
        stats.iterations += s.iterations;
        stats.final_residual_norm = s.final_residual_norm;
        stats.fallback_used |= s.fallback_used;
        x.axpy(1.0, &delta);
        iterations += 1;
        r = residual(&x)?;
        rnorm = l2_norm(&r);
        history.push(rnorm);
        if l2_norm(&delta) <= 1e-12 {
            break;
        }
    }
    finish(x, l2_norm(phi_n), stats, iterations, history, p, opts)
}

/// Dispatches to [`linear_step`] or [`nonlinear_step`].
pub fn step(
    kind: SchemeKind,
    phi_n: &Field2D,
    dt: f64,
    p: &SimParams,
    opts: &StepOptions,
) -> Result<(Field2D, StepReport)> {
    match kind {
        SchemeKind::Linear => linear_step(phi_n, dt, p, opts),
        SchemeKind::Nonlinear => nonlinear_step(phi_n, dt, p, opts),
    }
}

/// One forward-Euler step of the continuous right-hand side; test oracle
/// for consistency checks.
pub fn explicit_euler_step(phi_n: &Field2D, dt: f64, p: &SimParams) -> Field2D {
    let grad = grid::gradient(phi_n);
    let lap = grid::laplacian(phi_n);
    let bih = grid::biharmonic(phi_n);
    let out = (0..phi_n.grid().len())
        .map(|k| {
            let phi = phi_n.values()[k];
            let g2 = grad.x()[k].powi(2) + grad.y()[k].powi(2);
            phi + dt
                * (p.m0 * physics::g_prime_unchecked(phi, p) * g2
                    + p.m0 * physics::g_unchecked(phi, p) * lap.values()[k]
                    - 2.0 * p.biharmonic_coef() * bih.values()[k])
        })
        .collect();
    Field2D::from_vec(*phi_n.grid(), out)
}
