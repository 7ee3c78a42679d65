//! Command-line front end: assemble the generator, compute spectra,
//! run the semigroup, sweep the resolvent, verify the kernel bounds, and
//! collect run summaries into a Markdown report.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] boltzgap::Error),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(boltzgap::Error::InvalidModel(_)) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Verification(_) => "verification",
        }
    }

    fn exit_code(&self) -> i32 {
        match self.kind() {
            "verification" => 1,
            "config" => 2,
            _ => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "boltzgap",
    version,
    about = "Numerical laboratory for the linear Boltzmann generator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if absent.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for sampled checks; recorded in the run summary.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the discrete generator and save it as JSON.
    Assemble(RunArgs),
    /// Compute the spectrum, the gap, and the stationary mode.
    Spectrum(RunArgs),
    /// Run the semigroup forward in time and export the trajectory.
    Evolve(RunArgs),
    /// Sweep the resolvent norm along the imaginary axis.
    Resolvent(RunArgs),
    /// Check the kernel-level bounds and detailed balance.
    Verify(RunArgs),
    /// Collect run summaries into a Markdown table.
    Report(RunArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, args) = match &cli.command {
        Command::Assemble(a) => ("assemble", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Evolve(a) => ("evolve", a),
        Command::Resolvent(a) => ("resolvent", a),
        Command::Verify(a) => ("verify", a),
        Command::Report(a) => ("report", a),
    };
    std::fs::create_dir_all(&args.out).map_err(|e| {
        CliError::Config(format!("cannot create output directory {}: {e}", args.out.display()))
    })?;
    let f = match name {
        "assemble" => commands::assemble_cmd,
        "spectrum" => commands::spectrum_cmd,
        "evolve" => commands::evolve_cmd,
        "resolvent" => commands::resolvent_cmd,
        "verify" => commands::verify_cmd,
        _ => commands::report_cmd,
    };
    f(&args.config, &args.out, args.seed)
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            let msg = serde_json::json!({
                "error_kind": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{msg}");
            std::process::exit(e.exit_code());
        }
    }
}
