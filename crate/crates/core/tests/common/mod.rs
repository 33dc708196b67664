//! Independent oracles shared by the integration tests: double-loop stencils
//! and reductions, closed-form `G`, and a dense assembly of the linear-scheme
//! system.

#![allow(dead_code)]

use mmc_tdgl::{Field2D, Grid2D, SimParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn idx(g: &Grid2D, i: usize, j: usize) -> usize {
    i + j * g.nx()
}

pub fn bf_dx(g: &Grid2D, f: &[f64]) -> Vec<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let e = f[idx(g, (i + 1) % nx, j)];
            let w = f[idx(g, (i + nx - 1) % nx, j)];
            out[idx(g, i, j)] = (e - w) / (2.0 * g.hx());
        }
    }
    out
}

pub fn bf_dy(g: &Grid2D, f: &[f64]) -> Vec<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let n = f[idx(g, i, (j + 1) % ny)];
            let s = f[idx(g, i, (j + ny - 1) % ny)];
            out[idx(g, i, j)] = (n - s) / (2.0 * g.hy());
        }
    }
    out
}

pub fn bf_lap(g: &Grid2D, f: &[f64]) -> Vec<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let c = f[idx(g, i, j)];
            let e = f[idx(g, (i + 1) % nx, j)];
            let w = f[idx(g, (i + nx - 1) % nx, j)];
            let n = f[idx(g, i, (j + 1) % ny)];
            let s = f[idx(g, i, (j + ny - 1) % ny)];
            out[idx(g, i, j)] = (e - 2.0 * c + w) / (g.hx() * g.hx()) + (n - 2.0 * c + s) / (g.hy() * g.hy());
        }
    }
    out
}

pub fn bf_inner(g: &Grid2D, f: &[f64], h: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            s += f[idx(g, i, j)] * h[idx(g, i, j)] * g.hx() * g.hy();
        }
    }
    s
}

pub fn bf_mean(g: &Grid2D, f: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            s += f[idx(g, i, j)];
        }
    }
    s / (g.nx() * g.ny()) as f64
}

pub fn g_closed(phi: f64, p: &SimParams) -> f64 {
    p.kb * p.temp
        * (1.0 / (p.tau * phi) + 1.0 / (p.ncoef * phi) + p.rho * p.rho / (1.0 - p.rho * phi)
            - 2.0 * p.chi * p.rho * p.rho)
}

pub fn g_prime_closed(phi: f64, p: &SimParams) -> f64 {
    p.kb * p.temp
        * (-1.0 / (p.tau * phi * phi) - 1.0 / (p.ncoef * phi * phi)
            + p.rho.powi(3) / ((1.0 - p.rho * phi) * (1.0 - p.rho * phi)))
}

/// Matrix of a periodic stencil `Σ w · f[i+di, j+dj]`.
fn stencil_matrix(g: &Grid2D, taps: &[(i64, i64, f64)]) -> DMatrix<f64> {
    let (nx, ny) = (g.nx() as i64, g.ny() as i64);
    let n = g.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..ny {
        for i in 0..nx {
            let row = (i + j * nx) as usize;
            for &(di, dj, w) in taps {
                let col = ((i + di).rem_euclid(nx) + (j + dj).rem_euclid(ny) * nx) as usize;
                m[(row, col)] += w;
            }
        }
    }
    m
}

pub struct DenseSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

/// `A v = v/Δt - (M₀/2)G'(φ)∇φ·∇v - (M₀/2)G(φ)Δv + M₀k_BTK Δ²v` and the
/// matching right-hand side, assembled entry by entry.
pub fn assemble_linear_scheme(phi: &Field2D, dt: f64, p: &SimParams) -> DenseSystem {
    let g = *phi.grid();
    let n = g.len();
    let (hx, hy) = (g.hx(), g.hy());
    let dx = stencil_matrix(&g, &[(1, 0, 0.5 / hx), (-1, 0, -0.5 / hx)]);
    let dy = stencil_matrix(&g, &[(0, 1, 0.5 / hy), (0, -1, -0.5 / hy)]);
    let lap = stencil_matrix(
        &g,
        &[
            (0, 0, -2.0 / (hx * hx) - 2.0 / (hy * hy)),
            (1, 0, 1.0 / (hx * hx)),
            (-1, 0, 1.0 / (hx * hx)),
            (0, 1, 1.0 / (hy * hy)),
            (0, -1, 1.0 / (hy * hy)),
        ],
    );
    let bih = &lap * &lap;
    let v = DVector::from_column_slice(phi.values());
    let gx = &dx * &v;
    let gy = &dy * &v;
    let half = 0.5 * p.m0;
    let c = p.m0 * p.kb * p.temp * p.kcoef;
    let mut adv = DMatrix::zeros(n, n);
    let mut dif = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    let lv = &lap * &v;
    let bv = &bih * &v;
    for k in 0..n {
        let gp = half * g_prime_closed(v[k], p);
        let gg = half * g_closed(v[k], p);
        for col in 0..n {
            adv[(k, col)] = gp * (gx[k] * dx[(k, col)] + gy[k] * dy[(k, col)]);
            dif[(k, col)] = gg * lap[(k, col)];
        }
        b[k] = v[k] / dt + gp * (gx[k] * gx[k] + gy[k] * gy[k]) + gg * lv[k] - c * bv[k];
    }
    let a = DMatrix::identity(n, n) / dt - adv - dif + bih * c;
    DenseSystem { a, b }
}

pub fn noisy_field(g: Grid2D, mean: f64, amp: f64, seed: u64) -> Field2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field2D::from_fn(g, |_, _| mean + amp * rng.gen_range(-1.0..1.0))
}

pub fn weighted_norm(g: &Grid2D, v: &[f64]) -> f64 {
    bf_inner(g, v, v).sqrt()
}
