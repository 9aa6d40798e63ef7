use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "epiopt",
    version,
    about = "Activity-maximizing epidemic control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write timeseries.csv and summary.json.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the integration step from the config.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Run the sub-scenarios of a compare config and report activity ratios.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, dt } => epiopt::cli::run(config, out, *dt),
        Command::Compare { config, out } => epiopt::cli::compare(config, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epiopt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
