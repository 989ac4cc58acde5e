mod args;
mod commands;
mod output;
mod svg;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("KREIN_TOPO_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("KREIN_TOPO_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Spectrum { model, energy, grid, output } => commands::spectrum(&model, energy, &grid, &output),
        Command::Invariants { model, energy, grid, output } => commands::invariants(&model, energy, &grid, &output),
        Command::EdgeBands { model, energy, e_min, e_max, n_e, grid, output } => {
            commands::edge_bands_cmd(&model, energy, e_min, e_max, n_e, &grid, &output)
        }
        Command::Classify { model, matrix_file, energy, output } => {
            commands::classify(&model, matrix_file.as_deref(), energy, &output)
        }
        Command::Collide { scenario, params, t_min, t_max, steps, output } => {
            commands::collide(scenario, &params, t_min, t_max, steps, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
