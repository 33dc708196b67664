//! Reads a configuration file (or the defaults), reports every problem with
//! it and prints the fully expanded form that a run echoes to disk.
//!
//! cargo run --example config_roundtrip -- [file.cfg]

use mmc_tdgl::config::{parse_config, to_config_text};

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => "scheme = nonlinear\nstep_mode = adaptive\nt_end = 5  # short run\n".to_string(),
    };
    match parse_config(&text) {
        Ok(cfg) => {
            let echo = to_config_text(&cfg);
            assert_eq!(parse_config(&echo).unwrap(), cfg);
            print!("{echo}");
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
