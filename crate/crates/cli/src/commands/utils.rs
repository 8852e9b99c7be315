use cavsps_core::device::{brightness, cooperativity, coupling_efficiency, purcell, GaussianMode};
use clap::Subcommand;

use super::Report;
use crate::error::Result;

#[derive(Debug, Subcommand)]
pub enum UtilsCommand {
    /// Power overlap of two Gaussian modes (waists in µm, offset u in µm).
    Coupling {
        #[arg(allow_negative_numbers = true)]
        fiber_waist: f64,
        #[arg(allow_negative_numbers = true)]
        cavity_waist: f64,
        #[arg(allow_negative_numbers = true, default_value_t = 0.0)]
        offset: f64,
    },
    /// C = g²/(κ(γ∥/2 + γ*)), rates in ns⁻¹.
    Cooperativity {
        #[arg(allow_negative_numbers = true)]
        g: f64,
        #[arg(allow_negative_numbers = true)]
        kappa: f64,
        #[arg(allow_negative_numbers = true)]
        gamma_par: f64,
        #[arg(allow_negative_numbers = true)]
        gamma_star: f64,
    },
    /// Purcell factor 1 + C.
    Purcell {
        #[arg(allow_negative_numbers = true)]
        cooperativity: f64,
    },
    /// Photons per pulse from a detected rate (counts/s), repetition rate (Hz)
    /// and total detection efficiency.
    Brightness {
        #[arg(allow_negative_numbers = true)]
        detected_rate: f64,
        #[arg(allow_negative_numbers = true)]
        rep_rate: f64,
        #[arg(allow_negative_numbers = true)]
        efficiency: f64,
    },
}

pub fn run(cmd: &UtilsCommand) -> Result<()> {
    let mut report = Report::default();
    match *cmd {
        UtilsCommand::Coupling {
            fiber_waist,
            cavity_waist,
            offset,
        } => {
            let eta = coupling_efficiency(
                GaussianMode::new(fiber_waist)?,
                GaussianMode::new(cavity_waist)?,
                offset,
            );
            report.value("coupling_efficiency", eta);
        }
        UtilsCommand::Cooperativity {
            g,
            kappa,
            gamma_par,
            gamma_star,
        } => {
            report.value(
                "cooperativity",
                cooperativity(g, kappa, gamma_par, gamma_star)?,
            );
        }
        UtilsCommand::Purcell { cooperativity } => {
            report.value("purcell", purcell(cooperativity));
        }
        UtilsCommand::Brightness {
            detected_rate,
            rep_rate,
            efficiency,
        } => {
            report.value(
                "brightness",
                brightness(detected_rate, rep_rate, efficiency)?,
            );
        }
    }
    report.print();
    Ok(())
}
