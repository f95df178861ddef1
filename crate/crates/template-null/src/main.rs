use clap::Parser;

use template_null::cli;

fn main() {
    // TEMPLATE_NULL_THREADS caps the worker pool (default: all cores).
    if let Ok(v) = std::env::var("TEMPLATE_NULL_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }

    let args = cli::Cli::parse();
    match cli::run(&args) {
        Ok(result) => {
            print!("{}", result.summary);
            std::process::exit(result.exit_code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
