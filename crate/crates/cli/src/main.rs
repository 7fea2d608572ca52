use std::process::ExitCode;

use clap::Parser;
use soliton_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let echo: Vec<String> = std::env::args().skip(1).collect();
    let report = run(Cli::parse(), echo);
    match serde_json::to_string_pretty(&report) {
        Ok(text) => println!("{text}"),
        Err(e) => eprintln!("cannot serialize report: {e}"),
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(report.exit_code as u8)
}
