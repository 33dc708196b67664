//! Model constants, the reticular free-energy density and its derived
//! coefficient functions, and the discrete total free energy.
//!
//! All densities carry the `k_B T` prefactor. With the default constants
//! (`k_B = 1`) temperature is the only thermal knob.

use crate::error::{Error, Result};
use crate::grid::{self, Field2D};

/// Physical and model constants of the simplified TDGL equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Mobility `M₀`.
    pub m0: f64,
    /// Interaction parameter `χ`.
    pub chi: f64,
    pub tau: f64,
    /// Chain length `N`.
    pub ncoef: f64,
    pub rho: f64,
    /// Boltzmann constant in simulation units.
    pub kb: f64,
    /// Temperature `T`.
    pub temp: f64,
    /// Constant gradient-energy coefficient `K`.
    pub kcoef: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SimParams {
    /// `M₀ = 0.2, χ = 0.4, τ = 1e7, N = 800, ρ = 1` with `k_B = T = K = α = β = 1`.
    fn default() -> Self {
        Self {
            m0: 0.2,
            chi: 0.4,
            tau: 1e7,
            ncoef: 800.0,
            rho: 1.0,
            kb: 1.0,
            temp: 1.0,
            kcoef: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl SimParams {
    /// Checks the positivity constraints; `chi` may take any finite value.
    pub fn check(&self) -> Result<()> {
        let positive = [
            ("m0", self.m0),
            ("tau", self.tau),
            ("ncoef", self.ncoef),
            ("rho", self.rho),
            ("kb", self.kb),
            ("temp", self.temp),
            ("kcoef", self.kcoef),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ];
        let bad: Vec<String> = positive
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(k, v)| format!("{k} must be positive, got {v}"))
            .collect();
        if !self.chi.is_finite() {
            return Err(Error::InvalidParams(format!("chi must be finite, got {}", self.chi)));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }

    pub fn kbt(&self) -> f64 {
        self.kb * self.temp
    }

    /// Coefficient `M₀ k_B T K` of the biharmonic term (half the `2 M₀ k_B T K`
    /// prefactor, since the schemes average two biharmonic evaluations).
    pub fn biharmonic_coef(&self) -> f64 {
        self.m0 * self.kbt() * self.kcoef
    }

    /// Upper pole `1/ρ` of the logarithmic terms.
    pub fn phi_max(&self) -> f64 {
        1.0 / self.rho
    }
}

/// Sub-interval `(lo, hi)` of `(0, 1/ρ)` in which field values are accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleBand {
    lo: f64,
    hi: f64,
}

impl AdmissibleBand {
    pub const DEFAULT_MARGIN: f64 = 1e-4;

    pub fn new(lo: f64, hi: f64, p: &SimParams) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi < p.phi_max()) {
            return Err(Error::InvalidParams(format!(
                "band ({lo}, {hi}) must satisfy 0 < lo < hi < 1/rho = {}",
                p.phi_max()
            )));
        }
        Ok(Self { lo, hi })
    }

    /// `(1e-4, 1/ρ - 1e-4)`.
    pub fn for_params(p: &SimParams) -> Self {
        Self {
            lo: Self::DEFAULT_MARGIN,
            hi: p.phi_max() - Self::DEFAULT_MARGIN,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Open-interval membership.
    pub fn contains(&self, phi: f64) -> bool {
        phi > self.lo && phi < self.hi
    }

    /// First node of `f` outside the band, as an error.
    pub fn check_field(&self, f: &Field2D) -> Result<()> {
        let nx = f.grid().nx();
        match f.values().iter().position(|&v| !self.contains(v)) {
            None => Ok(()),
            Some(k) => Err(Error::OutOfBand {
                i: k % nx,
                j: k / nx,
                value: f.values()[k],
                lo: self.lo,
                hi: self.hi,
            }),
        }
    }
}

fn check_open(what: &'static str, phi: f64, lo: f64, hi: f64) -> Result<()> {
    if phi > lo && phi < hi {
        Ok(())
    } else {
        Err(Error::Domain { what, phi, lo, hi })
    }
}

#[inline]
pub(crate) fn g_unchecked(phi: f64, p: &SimParams) -> f64 {
    let rho2 = p.rho * p.rho;
    p.kbt()
        * (1.0 / (p.tau * phi) + 1.0 / (p.ncoef * phi) + rho2 / (1.0 - p.rho * phi)
            - 2.0 * p.chi * rho2)
}

#[inline]
pub(crate) fn g_prime_unchecked(phi: f64, p: &SimParams) -> f64 {
    let phi2 = phi * phi;
    let s = 1.0 - p.rho * phi;
    p.kbt() * (-1.0 / (p.tau * phi2) - 1.0 / (p.ncoef * phi2) + p.rho.powi(3) / (s * s))
}

#[inline]
pub(crate) fn free_energy_unchecked(phi: f64, p: &SimParams) -> f64 {
    let s = 1.0 - p.rho * phi;
    p.kbt()
        * (phi / p.tau * (p.alpha * phi / p.tau).ln()
            + phi / p.ncoef * (p.beta * phi / p.tau).ln()
            + s * s.ln()
            + p.chi * p.rho * phi * s)
}

/// `G(φ) = k_B T (1/(τφ) + 1/(Nφ) + ρ²/(1-ρφ) - 2χρ²)`, the second
/// derivative of the bulk density.
pub fn g(phi: f64, p: &SimParams) -> Result<f64> {
    check_open("G", phi, 0.0, p.phi_max())?;
    Ok(g_unchecked(phi, p))
}

/// `dG/dφ`.
pub fn g_prime(phi: f64, p: &SimParams) -> Result<f64> {
    check_open("G'", phi, 0.0, p.phi_max())?;
    Ok(g_prime_unchecked(phi, p))
}

/// Reticular bulk free-energy density `F(φ)`.
pub fn free_energy_density(phi: f64, p: &SimParams) -> Result<f64> {
    check_open("F", phi, 0.0, p.phi_max())?;
    Ok(free_energy_unchecked(phi, p))
}

/// Composition-dependent gradient coefficient in energy units,
/// `k_B T σ² / (36 φ (1-φ))`, the counterpart of `k_B T K`.
///
/// Diagnostic only: the dynamics use the constant `SimParams::kcoef`.
pub fn kappa(phi: f64, sigma: f64, p: &SimParams) -> Result<f64> {
    check_open("kappa", phi, 0.0, 1.0)?;
    Ok(p.kbt() * sigma * sigma / (36.0 * phi * (1.0 - phi)))
}

/// Discrete total free energy `Σ [F(φ) + k_B T K |∇_h φ|²] hx hy`.
pub fn total_energy(f: &Field2D, p: &SimParams) -> Result<f64> {
    let nx = f.grid().nx();
    if let Some(k) = f
        .values()
        .iter()
        .position(|&v| !(v > 0.0 && v < p.phi_max()))
    {
        return Err(Error::OutOfBand {
            i: k % nx,
            j: k / nx,
            value: f.values()[k],
            lo: 0.0,
            hi: p.phi_max(),
        });
    }
    Ok(total_energy_unchecked(f, p))
}

pub(crate) fn total_energy_unchecked(f: &Field2D, p: &SimParams) -> f64 {
    let grad = grid::gradient(f);
    let gk = p.kbt() * p.kcoef;
    let mut sum = 0.0;
    for (k, &phi) in f.values().iter().enumerate() {
        let gx = grad.x()[k];
        let gy = grad.y()[k];
        sum += free_energy_unchecked(phi, p) + gk * (gx * gx + gy * gy);
    }
    sum * f.grid().cell_area()
}

/// Outcome of scanning `G` over an admissible band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamReport {
    pub ok: bool,
    /// Location of the smallest sampled `G`.
    pub argmin_phi: f64,
    pub min_g: f64,
}

impl std::fmt::Display for ParamReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.ok {
            write!(f, "ok (min G = {:.6e} at phi = {:.6})", self.min_g, self.argmin_phi)
        } else {
            write!(
                f,
                "FAIL: G = {:.6e} < 0 at phi = {:.6}",
                self.min_g, self.argmin_phi
            )
        }
    }
}

/// Number of interior sample points used by [`validate_params`].
pub const VALIDATION_SAMPLES: usize = 10_000;

/// Scans `G` at both band edges and [`VALIDATION_SAMPLES`] interior points.
/// `G ≥ 0` over the band is the sufficient condition for L² stability.
pub fn validate_params(p: &SimParams, band: &AdmissibleBand) -> ParamReport {
    let (lo, hi) = (band.lo(), band.hi());
    let n = VALIDATION_SAMPLES;
    let step = (hi - lo) / (n + 1) as f64;
    let mut best = (lo, g_unchecked(lo, p));
    for k in 1..=n + 1 {
        let phi = if k == n + 1 { hi } else { lo + k as f64 * step };
        let v = g_unchecked(phi, p);
        if v < best.1 {
            best = (phi, v);
        }
    }
    ParamReport {
        ok: best.1 >= 0.0,
        argmin_phi: best.0,
        min_g: best.1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    // Independent transcription of the density, term by term.
    fn f_oracle(phi: f64, kbt: f64, tau: f64, n: f64, rho: f64, chi: f64) -> f64 {
        let t1 = (phi / tau) * (phi / tau).ln();
        let t2 = (phi / n) * (phi / tau).ln();
        let t3 = (1.0 - rho * phi) * (1.0 - rho * phi).ln();
        let t4 = chi * rho * phi * (1.0 - rho * phi);
        kbt * (t1 + t2 + t3 + t4)
    }

    #[test]
    fn coefficient_values_at_half() {
        let p = SimParams::default();
        assert!(rel_close(g(0.5, &p).unwrap(), 1.2025002, 1e-12));
        assert!(rel_close(g_prime(0.5, &p).unwrap(), 3.9949996, 1e-12));
        let f = free_energy_density(0.5, &p).unwrap();
        assert!((f - (-0.2570814)).abs() < 1e-7);
        assert!(rel_close(f, f_oracle(0.5, 1.0, 1e7, 800.0, 1.0, 0.4), 1e-14));
        assert!(rel_close(kappa(0.5, 1.0, &SimParams::default()).unwrap(), 1.0 / 9.0, 1e-15));
    }

    #[test]
    fn domain_errors() {
        let p = SimParams::default();
        for bad in [0.0, -0.1, 1.0, 1.5, f64::NAN] {
            assert!(matches!(g(bad, &p), Err(Error::Domain { .. })));
            assert!(g_prime(bad, &p).is_err());
            assert!(free_energy_density(bad, &p).is_err());
        }
        assert!(kappa(0.0, 1.0, &SimParams::default()).is_err());
        assert!(kappa(1.0, 1.0, &SimParams::default()).is_err());
    }

    #[test]
    fn g_blows_up_at_pole() {
        let p = SimParams::default();
        let mut prev = g(0.9, &p).unwrap();
        for k in 2..12 {
            let phi = 1.0 - 10f64.powi(-k);
            let v = g(phi, &p).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(prev > 1e10);
    }

    #[test]
    fn kappa_symmetry_and_pole() {
        for phi in [0.1, 0.25, 0.4, 0.63] {
            assert!(rel_close(
                kappa(phi, 1.3, &SimParams::default()).unwrap(),
                kappa(1.0 - phi, 1.3, &SimParams::default()).unwrap(),
                1e-14
            ));
        }
        assert!(kappa(1e-12, 1.0, &SimParams::default()).unwrap() > 1e9);
    }

    #[test]
    fn g_prime_matches_finite_differences() {
        let p = SimParams::default();
        let eps = 1e-6;
        for k in 0..100 {
            let phi = 0.05 + 0.9 * k as f64 / 99.0;
            let fd = (g(phi + eps, &p).unwrap() - g(phi - eps, &p).unwrap()) / (2.0 * eps);
            let an = g_prime(phi, &p).unwrap();
            assert!(rel_close(an, fd, 1e-6), "phi={phi}: {an} vs {fd}");
        }
        // pole term only: ρ³/(1-ρφ)² = 4 at φ = 1/2
        let bare = SimParams {
            tau: f64::MAX,
            ncoef: f64::MAX,
            ..p
        };
        assert!(rel_close(g_prime(0.5, &bare).unwrap(), 4.0, 1e-15));
    }

    #[test]
    fn temperature_linearity() {
        let p1 = SimParams::default();
        let p50 = SimParams { temp: 50.0, ..p1 };
        for phi in [0.05, 0.3, 0.5, 0.65, 0.97] {
            for (a, b) in [
                (g(phi, &p50).unwrap(), g(phi, &p1).unwrap()),
                (g_prime(phi, &p50).unwrap(), g_prime(phi, &p1).unwrap()),
                (
                    free_energy_density(phi, &p50).unwrap(),
                    free_energy_density(phi, &p1).unwrap(),
                ),
            ] {
                assert!(rel_close(a, 50.0 * b, 1e-14));
            }
        }
    }

    #[test]
    fn chi_term_isolates() {
        let p = SimParams::default();
        let p0 = SimParams { chi: 0.0, ..p };
        let phi = 0.37;
        let diff =
            free_energy_density(phi, &p0).unwrap() - free_energy_density(phi, &p).unwrap();
        assert!((diff - (-0.4 * phi * (1.0 - phi))).abs() < 1e-15);
    }

    #[test]
    fn constant_field_energy() {
        let g2 = Grid2D::square_2pi(64).unwrap();
        let p = SimParams::default();
        let u = total_energy(&Field2D::constant(g2, 0.5), &p).unwrap();
        let expect = g2.area() * free_energy_density(0.5, &p).unwrap();
        assert!(rel_close(u, expect, 1e-12));
        assert!((u - (-10.149169)).abs() < 1e-5);
    }

    #[test]
    fn energy_rejects_out_of_range_nodes() {
        let g2 = Grid2D::square_2pi(8).unwrap();
        let mut v = vec![0.5; 64];
        v[10] = 1.2;
        let f = Field2D::new(g2, v).unwrap();
        assert!(matches!(
            total_energy(&f, &SimParams::default()),
            Err(Error::OutOfBand { i: 2, j: 1, .. })
        ));
    }

    #[test]
    fn larger_gradient_coefficient_raises_energy() {
        let g2 = Grid2D::square_2pi(16).unwrap();
        let f = Field2D::from_fn(g2, |x, y| 0.5 + 0.1 * x.sin() * y.cos());
        let p = SimParams::default();
        let stiffer = SimParams { kcoef: 1.5, ..p };
        assert!(total_energy(&f, &stiffer).unwrap() > total_energy(&f, &p).unwrap());
    }

    #[test]
    fn parameter_scan() {
        let p = SimParams::default();
        let band = AdmissibleBand::new(0.01, 0.99, &p).unwrap();
        let r = validate_params(&p, &band);
        assert!(r.ok, "{r}");
        assert!(r.min_g > 0.0);

        let bad = SimParams { chi: 5.0, ..p };
        let r = validate_params(&bad, &band);
        assert!(!r.ok);
        assert!(r.min_g < 0.0);

        let ideal = SimParams {
            tau: f64::INFINITY,
            ncoef: f64::INFINITY,
            chi: 0.0,
            ..p
        };
        let r = validate_params(&ideal, &band);
        assert!(r.ok);
        assert!(rel_close(r.min_g, 1.0 / (1.0 - 0.01), 1e-12));
    }

    #[test]
    fn band_construction() {
        let p = SimParams::default();
        assert!(AdmissibleBand::new(0.0, 0.5, &p).is_err());
        assert!(AdmissibleBand::new(0.4, 0.3, &p).is_err());
        assert!(AdmissibleBand::new(0.1, 1.0, &p).is_err());
        let b = AdmissibleBand::for_params(&p);
        assert!(b.contains(0.5) && !b.contains(0.99995));
    }
}
