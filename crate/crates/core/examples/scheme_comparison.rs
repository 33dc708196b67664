//! The linear and nonlinear schemes from one initial field: per-run cost,
//! solver effort and how far apart the final states are.
//!
//! cargo run --release --example scheme_comparison

use std::time::Instant;

use mmc_tdgl::sim::{self, GridSpec, RunConfig};
use mmc_tdgl::SchemeKind;

fn main() {
    let base = RunConfig {
        grid: GridSpec { nx: 32, ny: 32, ..GridSpec::default() },
        dt: 0.01,
        t_end: 0.5,
        ..RunConfig::default()
    };
    let mut finals = Vec::new();
    for scheme in [SchemeKind::Linear, SchemeKind::Nonlinear] {
        let cfg = RunConfig { scheme, ..base.clone() };
        let start = Instant::now();
        let out = sim::run(&cfg).unwrap_or_else(|e| panic!("{scheme}: {e}"));
        let cg: usize = out.log.iter().map(|r| r.cg_iters).sum();
        let newton: usize = out.log.iter().map(|r| r.newton_iters).sum();
        let last = out.log.last().unwrap();
        println!(
            "{scheme:<10} {} steps  {:.2} s  cg {cg}  newton {newton}  U {:.6e}  |phi|_h {:.6}",
            out.steps(),
            start.elapsed().as_secs_f64(),
            last.u,
            last.l2_norm
        );
        finals.push(out.final_field);
    }
    println!("|linear - nonlinear|_h at t = {}: {:.3e}", base.t_end, sim::relative_error(&finals[0], &finals[1]).unwrap());
}
