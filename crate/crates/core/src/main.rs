use std::process::ExitCode;

use clap::Parser;

use gamma_null::cli::{execute, Cli, Outcome};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((report, outcome)) => {
            print!("{}", report.summary());
            eprintln!("wall_clock = {:.3} s", report.wall_clock.as_secs_f64());
            match outcome {
                Outcome::Pass => ExitCode::SUCCESS,
                Outcome::VerdictFailed => {
                    for v in report.failures() {
                        eprintln!("FAIL {}: {}", v.invariant, v.detail);
                    }
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
