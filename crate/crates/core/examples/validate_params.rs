//! Checks the stability condition G >= 0 over the admissible band while the
//! Flory-Huggins parameter is swept.
//!
//! cargo run --example validate_params

use mmc_tdgl::physics::{self, AdmissibleBand, SimParams};

fn main() {
    for chi in [0.0, 0.4, 0.5, 0.6, 1.0, 5.0] {
        let p = SimParams { chi, ..SimParams::default() };
        let band = AdmissibleBand::for_params(&p);
        println!("chi = {chi:<4} {}", physics::validate_params(&p, &band));
    }
}
