use clap::Parser;
use mmc_tdgl::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("MMC_TDGL_THREADS") {
        match v.trim().parse::<usize>() {
            // 0 leaves rayon's automatic sizing in place
            Ok(n) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            Err(_) => {
                eprintln!("MMC_TDGL_THREADS: expected a non-negative integer, got '{v}'");
                std::process::exit(1);
            }
        }
    }
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = execute(&cli.command, &mut stdout) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
