use std::process::ExitCode;

use clap::Parser;
use rle::cli::{run, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(out) => {
            print!("{}", out.report);
            for path in &out.written {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rle: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
