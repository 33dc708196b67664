//! Matrix-free Krylov solvers on [`Field2D`] vectors.
//!
//! Operators are never assembled; they only need to apply themselves to a
//! field. Residual norms are the discrete L² norm of the grid, dot products
//! inside the iterations use plain sequential sums (the quadrature weight
//! cancels in every ratio).

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{dot_slices, l2_norm, Field2D, Grid2D};

/// Linear map on fields over a fixed grid.
pub trait LinearOperator {
    fn apply_into(&self, x: &Field2D, out: &mut Field2D);

    fn apply(&self, x: &Field2D) -> Field2D {
        let mut out = Field2D::zeros(*x.grid());
        self.apply_into(x, &mut out);
        out
    }

    /// Whether the operator is known to be symmetric.
    fn symmetric_hint(&self) -> bool {
        false
    }
}

/// Adapts a closure into a [`LinearOperator`].
pub struct FnOperator<F> {
    f: F,
    symmetric: bool,
}

impl<F> FnOperator<F>
where
    F: Fn(&Field2D) -> Field2D,
{
    pub fn new(f: F) -> Self {
        Self {
            f,
            symmetric: false,
        }
    }

    pub fn symmetric(f: F) -> Self {
        Self { f, symmetric: true }
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&Field2D) -> Field2D,
{
    fn apply_into(&self, x: &Field2D, out: &mut Field2D) {
        *out = (self.f)(x);
    }

    fn apply(&self, x: &Field2D) -> Field2D {
        (self.f)(x)
    }

    fn symmetric_hint(&self) -> bool {
        self.symmetric
    }
}

/// How the stopping threshold scales with the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceMode {
    /// `‖b - Ax‖ ≤ tol · max(1, ‖b‖)`.
    Relative,
    /// `‖b - Ax‖ ≤ tol`.
    Absolute,
}

impl fmt::Display for ToleranceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToleranceMode::Relative => "relative",
            ToleranceMode::Absolute => "absolute",
        })
    }
}

impl std::str::FromStr for ToleranceMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "relative" => Ok(Self::Relative),
            "absolute" => Ok(Self::Absolute),
            other => Err(format!("unknown tolerance mode '{other}' (relative|absolute)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub mode: ToleranceMode,
    /// Iteration cap; `None` means `10 * nx * ny`.
    pub maxit: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            mode: ToleranceMode::Relative,
            maxit: None,
        }
    }
}

impl SolverOptions {
    pub fn absolute(tol: f64) -> Self {
        Self {
            tol,
            mode: ToleranceMode::Absolute,
            maxit: None,
        }
    }

    fn threshold(&self, b: &Field2D) -> f64 {
        match self.mode {
            ToleranceMode::Relative => self.tol * l2_norm(b).max(1.0),
            ToleranceMode::Absolute => self.tol,
        }
    }

    fn max_iterations(&self, grid: &Grid2D) -> usize {
        self.maxit.unwrap_or(10 * grid.len()).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    pub fallback_used: bool,
}

impl fmt::Display for SolveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, residual {:.3e}, converged={}, fallback={}",
            self.iterations, self.final_residual_norm, self.converged, self.fallback_used
        )
    }
}

// Abandon plain CG when the best residual has not dropped by this factor
// within the window; nonsymmetric systems can make it wander indefinitely.
const STALL_WINDOW: usize = 200;
const STALL_FACTOR: f64 = 0.9;
const MAX_RESTARTS: usize = 5;

fn residual(a: &dyn LinearOperator, b: &Field2D, x: &Field2D, scratch: &mut Field2D) -> Field2D {
    a.apply_into(x, scratch);
    let mut r = b.clone();
    r.axpy(-1.0, scratch);
    r
}

fn check_shapes(b: &Field2D, x0: &Field2D, opts: &SolverOptions) -> Result<()> {
    if b.grid() != x0.grid() {
        return Err(Error::GridMismatch);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams(format!(
            "solver tolerance must be positive, got {}",
            opts.tol
        )));
    }
    Ok(())
}

/// Conjugate gradient for `A x = b` starting from `x0`.
pub fn cg(
    a: &dyn LinearOperator,
    b: &Field2D,
    x0: &Field2D,
    opts: &SolverOptions,
) -> Result<(Field2D, SolveStats)> {
    cg_monitored(a, b, x0, opts, |_| {})
}

/// [`cg`] calling `monitor` with every iterate (including `x0`).
pub fn cg_monitored(
    a: &dyn LinearOperator,
    b: &Field2D,
    x0: &Field2D,
    opts: &SolverOptions,
    mut monitor: impl FnMut(&Field2D),
) -> Result<(Field2D, SolveStats)> {
    check_shapes(b, x0, opts)?;
    let grid = *b.grid();
    let w = grid.cell_area();
    let thresh = opts.threshold(b);
    let maxit = opts.max_iterations(&grid);

    let mut x = x0.clone();
    let mut ap = Field2D::zeros(grid);
    let mut r = residual(a, b, &x, &mut ap);
    let mut rr = dot_slices(r.values(), r.values());
    let mut stats = SolveStats {
        final_residual_norm: (rr * w).sqrt(),
        ..SolveStats::default()
    };
    monitor(&x);
    if stats.final_residual_norm <= thresh {
        stats.converged = true;
        return Ok((x, stats));
    }

    let mut p = r.clone();
    let mut best = stats.final_residual_norm;
    let mut best_at = 0;
    let mut restarts = 0;
    while stats.iterations < maxit {
        a.apply_into(&p, &mut ap);
        let pap = dot_slices(p.values(), ap.values());
        if !(pap.is_finite() && pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        stats.iterations += 1;
        monitor(&x);

        let rr_new = dot_slices(r.values(), r.values());
        let rnorm = (rr_new * w).sqrt();
        stats.final_residual_norm = rnorm;
        if rnorm <= thresh {
            // confirm against the true residual before accepting
            r = residual(a, b, &x, &mut ap);
            rr = dot_slices(r.values(), r.values());
            stats.final_residual_norm = (rr * w).sqrt();
            if stats.final_residual_norm <= thresh {
                stats.converged = true;
                return Ok((x, stats));
            }
            restarts += 1;
            if restarts > MAX_RESTARTS {
                break;
            }
            p = r.clone();
            continue;
        }
        if rnorm < STALL_FACTOR * best {
            best = rnorm;
            best_at = stats.iterations;
        } else if stats.iterations - best_at > STALL_WINDOW {
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pv, &rv) in p.values_mut().iter_mut().zip(r.values()) {
            *pv = rv + beta * *pv;
        }
    }
    Err(Error::NotConverged { stats })
}

/// CG on the normal equations `Aᵀ A x = Aᵀ b`, with convergence measured on
/// the residual of the original system.
pub fn cgnr(
    a: &dyn LinearOperator,
    at: &dyn LinearOperator,
    b: &Field2D,
    x0: &Field2D,
    opts: &SolverOptions,
) -> Result<(Field2D, SolveStats)> {
    check_shapes(b, x0, opts)?;
    let grid = *b.grid();
    let w = grid.cell_area();
    let thresh = opts.threshold(b);
    let maxit = opts.max_iterations(&grid);

    let mut x = x0.clone();
    let mut ap = Field2D::zeros(grid);
    let mut r = residual(a, b, &x, &mut ap);
    let mut stats = SolveStats {
        final_residual_norm: l2_norm(&r),
        ..SolveStats::default()
    };
    if stats.final_residual_norm <= thresh {
        stats.converged = true;
        return Ok((x, stats));
    }
    let mut z = at.apply(&r);
    let mut p = z.clone();
    let mut zz = dot_slices(z.values(), z.values());
    while stats.iterations < maxit {
        a.apply_into(&p, &mut ap);
        let apap = dot_slices(ap.values(), ap.values());
        if !(apap.is_finite() && apap > 0.0) {
            break;
        }
        let alpha = zz / apap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        stats.iterations += 1;
        stats.final_residual_norm = (dot_slices(r.values(), r.values()) * w).sqrt();
        if stats.final_residual_norm <= thresh {
            r = residual(a, b, &x, &mut ap);
            stats.final_residual_norm = l2_norm(&r);
            if stats.final_residual_norm <= thresh {
                stats.converged = true;
                return Ok((x, stats));
            }
        }
        at.apply_into(&r, &mut z);
        let zz_new = dot_slices(z.values(), z.values());
        let beta = zz_new / zz;
        zz = zz_new;
        for (pv, &zv) in p.values_mut().iter_mut().zip(z.values()) {
            *pv = zv + beta * *pv;
        }
    }
    Err(Error::NotConverged { stats })
}

/// Runs [`cg`]; if it fails and a transpose is available, retries from `x0`
/// with [`cgnr`]. Iteration counts of both attempts are summed.
pub fn solve(
    a: &dyn LinearOperator,
    at: Option<&dyn LinearOperator>,
    b: &Field2D,
    x0: &Field2D,
    opts: &SolverOptions,
) -> Result<(Field2D, SolveStats)> {
    match cg(a, b, x0, opts) {
        Ok(out) => Ok(out),
        Err(Error::NotConverged { stats: first }) => {
            let Some(at) = at else {
                return Err(Error::NotConverged { stats: first });
            };
            let tag = |mut s: SolveStats| {
                s.iterations += first.iterations;
                s.fallback_used = true;
                s
            };
            match cgnr(a, at, b, x0, opts) {
                Ok((x, s)) => Ok((x, tag(s))),
                Err(Error::NotConverged { stats }) => Err(Error::NotConverged { stats: tag(stats) }),
                Err(e) => Err(e),
            }
        }
        Err(e) => Err(e),
    }
}

/// Central finite-difference directional derivative of `r` at `x` along `v`.
///
/// The step is `eps * ‖x‖ / ‖v‖` when both norms are nonzero, else `eps`.
pub fn jacobian_vector<R>(r: R, x: &Field2D, v: &Field2D, eps: f64) -> Result<Field2D>
where
    R: Fn(&Field2D) -> Result<Field2D>,
{
    if x.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let vn = l2_norm(v);
    if vn == 0.0 {
        return Ok(Field2D::zeros(*v.grid()));
    }
    let xn = l2_norm(x);
    let h = if xn > 0.0 { eps * xn / vn } else { eps };
    let mut xp = x.clone();
    xp.axpy(h, v);
    let mut xm = x.clone();
    xm.axpy(-h, v);
    let rp = r(&xp)?;
    let rm = r(&xm)?;
    let inv = 0.5 / h;
    rp.zip_map(&rm, |a, b| (a - b) * inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{laplacian, Grid2D};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid2D, seed: u64) -> Field2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field2D::new(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn helmholtz(nu: f64) -> FnOperator<impl Fn(&Field2D) -> Field2D> {
        FnOperator::symmetric(move |v: &Field2D| v.sub(&laplacian(v).scale(nu)).unwrap())
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let g = Grid2D::square_2pi(8).unwrap();
        let b = random_field(g, 1);
        let id = FnOperator::symmetric(|v: &Field2D| v.clone());
        let (x, s) = cg(&id, &b, &Field2D::zeros(g), &SolverOptions::absolute(1e-12)).unwrap();
        assert_eq!(s.iterations, 1);
        assert!(s.converged);
        assert!(l2_norm(&x.sub(&b).unwrap()) < 1e-14);
    }

    #[test]
    fn zero_rhs_needs_no_work() {
        let g = Grid2D::square_2pi(8).unwrap();
        let z = Field2D::zeros(g);
        let a = helmholtz(0.1);
        let (x, s) = cg(&a, &z, &z, &SolverOptions::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(x, z);
        let (x, s) = cgnr(&a, &a, &z, &z, &SolverOptions::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(x, z);
    }

    #[test]
    fn nonconvergence_reports_stats() {
        let g = Grid2D::square_2pi(8).unwrap();
        let b = random_field(g, 2);
        let a = helmholtz(1.0);
        let opts = SolverOptions {
            maxit: Some(2),
            ..SolverOptions::absolute(1e-14)
        };
        match cg(&a, &b, &Field2D::zeros(g), &opts) {
            Err(Error::NotConverged { stats }) => {
                assert_eq!(stats.iterations, 2);
                assert!(!stats.converged);
            }
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(cg(&a, &b, &b, &SolverOptions::absolute(0.0)).is_err());
    }

    #[test]
    fn fallback_is_flagged() {
        // an indefinite operator defeats CG immediately; CGNR still solves it
        let g = Grid2D::square_2pi(4).unwrap();
        let b = random_field(g, 3);
        let neg = FnOperator::new(|v: &Field2D| v.scale(-2.0));
        let (x, s) = solve(&neg, Some(&neg), &b, &Field2D::zeros(g), &SolverOptions::absolute(1e-12))
            .unwrap();
        assert!(s.fallback_used && s.converged);
        assert!(l2_norm(&x.scale(-2.0).sub(&b).unwrap()) < 1e-12);
        assert!(solve(&neg, None, &b, &Field2D::zeros(g), &SolverOptions::absolute(1e-12)).is_err());
    }

    #[test]
    fn jvp_of_linear_and_quadratic_maps() {
        let g = Grid2D::square_2pi(8).unwrap();
        let x = random_field(g, 4).map(|v| 0.5 + 0.2 * v);
        let v = random_field(g, 5);
        let lin = |f: &Field2D| Ok(laplacian(f));
        let jv = jacobian_vector(lin, &x, &v, 1e-6).unwrap();
        let exact = laplacian(&v);
        assert!(l2_norm(&jv.sub(&exact).unwrap()) <= 1e-8 * l2_norm(&exact).max(1.0));

        let sq = |f: &Field2D| Ok(f.map(|a| a * a));
        let jv = jacobian_vector(sq, &x, &v, 1e-6).unwrap();
        let exact = x.zip_map(&v, |a, b| 2.0 * a * b).unwrap();
        assert!(l2_norm(&jv.sub(&exact).unwrap()) <= 1e-6);

        let jv = jacobian_vector(sq, &x, &Field2D::zeros(g), 1e-6).unwrap();
        assert_eq!(jv, Field2D::zeros(g));
    }
}
