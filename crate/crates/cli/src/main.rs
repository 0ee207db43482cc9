use std::io::Write;

use clap::Parser;
use phfem_cli::{run, Cli};

fn main() {
    match run(Cli::parse()) {
        Ok(msg) => {
            // A closed pipe is not an error for a reporting tool.
            let _ = writeln!(std::io::stdout(), "{msg}");
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.code);
        }
    }
}
