//! `netheat run <config>` executes one experiment and prints its summary;
//! `netheat validate <file>` checks a graph or tree interchange file.
//! Exit status: 0 when every asserted invariant holds, 1 when one fails,
//! 2 on malformed input or an execution error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "netheat", version, about = "Reaction-diffusion experiments on metric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Flat key = value config; see the crate README for the schema.
        config: PathBuf,
    },
    /// Check a graph or tree file and report its shape.
    Validate {
        /// Graph (`graph v1`) or tree (`tree v1`) interchange file.
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config } => netheat::cli::run(&config).map(|out| {
            print!("{}", out.summary);
            out.passed
        }),
        Command::Validate { file } => netheat::cli::validate(&file).map(|out| {
            print!("{}", out.report);
            out.ok
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
