use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcool_cli::{run, CliError, Experiment, RunConfig};

#[derive(Parser)]
#[command(name = "qcool", version, about = "Measurement-based cooling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its CSV table.
    Run {
        config: PathBuf,
        /// Override the output path from the config; `-` prints to stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check a config and print its canonical form.
    Validate { config: PathBuf },
    /// List the experiment kinds.
    ListExperiments,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = RunConfig::load(&config)?;
            let table = run(&cfg)?;
            let dest = output.unwrap_or_else(|| cfg.output.clone());
            if dest.as_os_str() == "-" {
                print!("{}", table.to_csv_string());
            } else {
                table.save(&dest)?;
                eprintln!("{}: {} rows written to {}", cfg.experiment, table.rows.len(), dest.display());
            }
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            print!("{}", cfg.canonical());
        }
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<13} {}", e.name(), e.description());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
