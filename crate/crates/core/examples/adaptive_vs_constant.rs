//! Cost and accuracy of the adaptive step against constant steps, measured
//! against a fine constant-step reference from the same initial field.
//!
//! cargo run --release --example adaptive_vs_constant -- [t_end]

use mmc_tdgl::linsolve::SolverOptions;
use mmc_tdgl::sim::{self, BenchPolicy, BenchSpec, GridSpec, RunConfig};

fn main() {
    let t_end: f64 = std::env::args().nth(1).map_or(2.0, |s| s.parse().expect("t_end"));
    let cfg = RunConfig {
        grid: GridSpec { nx: 32, ny: 32, ..GridSpec::default() },
        t_end,
        // per-step changes of the fine reference are below the default
        // relative tolerance, so resolve them
        solver: SolverOptions { tol: 1e-12, ..SolverOptions::default() },
        bench: BenchSpec {
            reference_dt: 1e-4,
            candidates: vec![
                BenchPolicy::Constant(0.01),
                BenchPolicy::Constant(0.001),
                BenchPolicy::Adaptive,
            ],
            times: vec![t_end / 2.0, t_end],
        },
        ..RunConfig::default()
    };
    let table = sim::bench(&cfg).unwrap_or_else(|e| panic!("bench failed: {e}"));

    print!("{:<12} {:>8} {:>9}", "policy", "steps", "wall s");
    for t in &table.times {
        print!(" {:>12}", format!("RE(t={t})"));
    }
    println!();
    for row in std::iter::once(&table.reference).chain(&table.rows) {
        let steps = row.steps.map_or("-".into(), |s| s.to_string());
        print!("{:<12} {:>8} {:>9.2}", row.policy, steps, row.wall_seconds);
        for e in &row.errors {
            print!(" {:>12}", e.map_or("-".into(), |e| format!("{e:.3e}")));
        }
        println!();
    }
}
