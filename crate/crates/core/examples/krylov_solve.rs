//! One linear-scheme system solved matrix-free by CG and by CGNR on the normal
//! equations, with iteration counts and the residual left by each.
//!
//! cargo run --release --example krylov_solve

use mmc_tdgl::grid;
use mmc_tdgl::linsolve::{self, LinearOperator, SolverOptions};
use mmc_tdgl::schemes::LinearSchemeOperator;
use mmc_tdgl::sim::{self, GridSpec};
use mmc_tdgl::{AdmissibleBand, SimParams};

fn main() {
    let p = SimParams::default();
    let g = GridSpec::default().build().unwrap();
    let phi = sim::init_field(g, 0.65, 0.05, 42, &AdmissibleBand::for_params(&p)).unwrap();
    let opts = SolverOptions { tol: 1e-10, ..SolverOptions::default() };
    for dt in [1e-3, 1e-2, 1e-1] {
        let op = LinearSchemeOperator::new(&phi, dt, &p);
        let b = op.rhs(&phi);
        let (x_cg, cg) = linsolve::solve(&op, Some(&op.transpose()), &b, &phi, &opts).unwrap();
        let (x_nr, nr) = linsolve::cgnr(&op, &op.transpose(), &b, &phi, &opts).unwrap();
        let res = |x| grid::l2_norm(&op.apply(x).sub(&b).unwrap());
        println!(
            "dt {dt:.0e}: cg {:>4} iters residual {:.2e} | cgnr {:>4} iters residual {:.2e} | |x_cg - x_cgnr|_h {:.2e}",
            cg.iterations,
            res(&x_cg),
            nr.iterations,
            res(&x_nr),
            grid::l2_norm(&x_cg.sub(&x_nr).unwrap())
        );
    }
}
