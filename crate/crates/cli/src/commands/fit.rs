use std::path::{Path, PathBuf};

use cavsps_core::fitting::{
    fit_cavity_stage, fit_detector_response, fit_qd_stage, fit_saturation, FitReport,
    QdStageOptions, SaturationData, SaturationWeights, SpectrumData,
};
use cavsps_core::observables::{CorrelationCurve, SpectrumModel};
use cavsps_core::qed::Detection;
use clap::{Args, ValueEnum};

use super::load_config;
use super::spectrum::Model;
use crate::config::{DetectorSection, SaturationSection};
use crate::error::{CliError, Result};
use crate::table::DataTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Cavity,
    Qd,
    Saturation,
    Detector,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub stage: Stage,
    /// Data table; repeat for several spectra.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    /// Detection for each spectrum, in the order of --data. A single value
    /// applies to all.
    #[arg(long, value_parser = super::parse_projector, default_value = "none")]
    pub projector: Vec<Detection>,
    /// Transmission scale divided out of QD-stage spectra (the cavity-stage
    /// `scale`).
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, value_enum, default_value = "weak")]
    pub model: Model,
    #[arg(long)]
    pub fix_phi: bool,
    #[arg(long)]
    pub fix_f_qd_x: bool,
    /// Iteration cap for the QD stage.
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Relative count-rate noise for the saturation stage.
    #[arg(long, default_value_t = 0.01)]
    pub rate_sigma: f64,
    /// Absolute g²(0) noise for the saturation stage.
    #[arg(long, default_value_t = 0.01)]
    pub g2_sigma: f64,
    /// Where to write the updated configuration.
    #[arg(long)]
    pub write_config: Option<PathBuf>,
}

pub fn run(config: Option<&Path>, args: &FitArgs) -> Result<()> {
    let mut cfg = load_config(config)?;
    let (report, converged) = match args.stage {
        Stage::Cavity => {
            let data = spectra(args, cfg.drive.angle)?;
            let fit = fit_cavity_stage(&data, &cfg.params()?)?;
            cfg.set_system(&fit.apply(&cfg.params()?));
            (fit.report(), fit.result.converged)
        }
        Stage::Qd => {
            if !(args.scale.is_finite() && args.scale > 0.0) {
                return Err(CliError::Config("--scale must be positive".into()));
            }
            let data: Vec<SpectrumData> = spectra(args, cfg.drive.angle)?
                .iter()
                .map(|d| d.normalized(args.scale))
                .collect();
            let options = QdStageOptions {
                model: match args.model {
                    Model::Weak => SpectrumModel::WeakDrive,
                    Model::Master => SpectrumModel::MasterEquation(cfg.space()?),
                },
                fix_phi: args.fix_phi,
                fix_f_qd_x: args.fix_f_qd_x,
                ..QdStageOptions::default()
            };
            let options = QdStageOptions {
                max_iterations: args.max_iterations.unwrap_or(options.max_iterations),
                ..options
            };
            let fit = fit_qd_stage(&data, &cfg.params()?, &options)?;
            cfg.set_system(&fit.params);
            (fit.report(), fit.result.converged)
        }
        Stage::Saturation => {
            let path = single(args)?;
            let t = DataTable::read(path)?;
            let data = SaturationData::new(
                t.require("power_nw", path)?,
                t.require("rate_cps", path)?,
                t.column("g2"),
            )
            .map_err(|e| CliError::data(path, e.to_string()))?;
            let weights = SaturationWeights {
                rate_rel_sigma: args.rate_sigma,
                g2_sigma: args.g2_sigma,
            };
            let fit = fit_saturation(&data, &weights)?;
            if fit.degenerate {
                eprintln!("warning: the data do not constrain the saturation knee");
            }
            let m = fit.model;
            cfg.saturation = Some(SaturationSection {
                r_max: m.r_max,
                p_sat_nw: m.p_sat,
                c_leak: m.c_leak,
                g2_single: fit.g2_single,
            });
            (fit.report(), fit.result.converged)
        }
        Stage::Detector => {
            let path = single(args)?;
            let t = DataTable::read(path)?;
            let curve =
                CorrelationCurve::new(t.require("tau_ns", path)?, t.require("counts", path)?)
                    .map_err(|e| CliError::data(path, e.to_string()))?;
            let fit = fit_detector_response(&curve)?;
            if fit.degenerate {
                eprintln!(
                    "warning: one exponential suffices; reporting a single-exponential response"
                );
            }
            cfg.detector = Some(DetectorSection::from_response(&fit.response));
            (fit.report(), fit.result.converged)
        }
    };
    print_report(&report);
    if let Some(p) = &args.write_config {
        cfg.save(p)?;
    }
    if converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(
            format!("{:?} stage", args.stage).to_lowercase(),
        ))
    }
}

fn print_report(report: &FitReport) {
    println!("{report}");
}

fn single(args: &FitArgs) -> Result<&Path> {
    match args.data.as_slice() {
        [p] => Ok(p),
        _ => Err(CliError::Config(
            "this stage takes exactly one --data table".into(),
        )),
    }
}

fn spectra(args: &FitArgs, drive_angle: f64) -> Result<Vec<SpectrumData>> {
    let projectors = match args.projector.len() {
        1 => vec![args.projector[0]; args.data.len()],
        n if n == args.data.len() => args.projector.clone(),
        n => {
            return Err(CliError::Config(format!(
                "{n} projectors given for {} data tables",
                args.data.len()
            )))
        }
    };
    args.data
        .iter()
        .zip(projectors)
        .map(|(path, det)| {
            let t = DataTable::read(path)?;
            SpectrumData::new(
                t.require("freq_ghz", path)?,
                t.require("transmission", path)?,
                det,
                drive_angle,
            )
            .map_err(|e| CliError::data(path, e.to_string()))
        })
        .collect()
}
