//! `cavsps`: simulation and analysis of a cavity-enhanced single-photon
//! source from the command line.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical
//! failure, 4 fit did not converge.

mod commands;
mod config;
mod error;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{fit, g2, hom, spectrum, synth, utils};

#[derive(Debug, Parser)]
#[command(
    name = "cavsps",
    version,
    about = "Cavity QED single-photon source simulation and analysis"
)]
struct Cli {
    /// TOML run configuration (default: the reference device).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transmission spectra and gate-voltage maps.
    Spectrum(spectrum::SpectrumArgs),
    /// CW g² curves, or g²(0) from a pulsed histogram.
    G2(g2::G2Args),
    /// Indistinguishability from an interferometer histogram, a simulation or
    /// a measured peak ratio.
    Hom(hom::HomArgs),
    /// Staged parameter fits.
    Fit(fit::FitArgs),
    /// Device formulas.
    #[command(subcommand)]
    Utils(utils::UtilsCommand),
    /// Synthetic data for testing the fit stages.
    Synth(synth::SynthArgs),
    /// Print the default configuration.
    Config,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let result = match &cli.command {
        Command::Spectrum(a) => spectrum::run(config, a),
        Command::G2(a) => g2::run(config, a),
        Command::Hom(a) => hom::run(config, a),
        Command::Fit(a) => fit::run(config, a),
        Command::Utils(c) => utils::run(c),
        Command::Synth(a) => synth::run(config, a),
        Command::Config => commands::load_config(config).map(|c| print!("{}", c.to_toml())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error::CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
