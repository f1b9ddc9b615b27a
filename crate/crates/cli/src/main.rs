use std::io::Write;

use clap::Parser;

fn main() {
    let cli = sdgcl_cli::Cli::parse();
    match sdgcl_cli::run(cli) {
        // A closed pipe on stdout is not an error worth reporting.
        Ok(out) => {
            let _ = writeln!(std::io::stdout(), "{out}");
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
