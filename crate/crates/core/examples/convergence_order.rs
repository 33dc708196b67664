//! Observed temporal order of both schemes on a smooth initial field, with a
//! fine-step run of the same scheme as reference.
//!
//! cargo run --release --example convergence_order

use mmc_tdgl::linsolve::SolverOptions;
use mmc_tdgl::sim::{self, GridSpec, RunConfig};
use mmc_tdgl::{Field2D, SchemeKind};

fn main() {
    let grid = GridSpec { nx: 32, ny: 32, ..GridSpec::default() }.build().unwrap();
    let phi0 = Field2D::from_fn(grid, |x, y| 0.65 + 0.01 * x.cos() + 0.01 * y.cos());
    let dts = [4e-3, 2e-3, 1e-3];
    for scheme in [SchemeKind::Linear, SchemeKind::Nonlinear] {
        let cfg = |dt: f64| RunConfig {
            grid: GridSpec { nx: 32, ny: 32, ..GridSpec::default() },
            scheme,
            dt,
            t_end: 0.1,
            solver: SolverOptions { tol: 1e-13, ..SolverOptions::default() },
            newton_tol: 1e-12,
            ..RunConfig::default()
        };
        let solve = |dt: f64| sim::run_from(&cfg(dt), phi0.clone()).unwrap().final_field;
        let reference = solve(5e-5);
        let errs: Vec<f64> = dts.iter().map(|&dt| sim::relative_error(&solve(dt), &reference).unwrap()).collect();
        println!("{scheme}");
        for (k, (dt, e)) in dts.iter().zip(&errs).enumerate() {
            match k {
                0 => println!("  dt {dt:.0e}  error {e:.3e}"),
                _ => println!("  dt {dt:.0e}  error {e:.3e}  order {:.3}", (errs[k - 1] / e).log2()),
            }
        }
    }
}
