use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use finsler_core::cli::{error_json, run_scenario, Command, RunOptions};
use finsler_core::config::ScenarioConfig;
use finsler_core::Error;

/// Anisotropic distances, maximal/minimal extensions and supremal levels on
/// discretized domains.
#[derive(Debug, Parser)]
#[command(name = "finsler", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extend inadmissible data anyway (the results are then not solutions).
    #[arg(long)]
    override_admissibility: bool,
    /// Print errors as JSON on stdout.
    #[arg(long)]
    json_errors: bool,
}

fn run(args: &Args) -> Result<i32, Error> {
    let config = ScenarioConfig::from_path(&args.config)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions {
        out: Some(out),
        override_admissibility: args.override_admissibility,
    };
    let report = run_scenario(&config, args.command, &opts)?;
    print!("{}", report.render());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            if args.json_errors {
                println!("{}", error_json(&e));
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
