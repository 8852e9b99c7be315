use std::path::{Path, PathBuf};

use cavsps_core::hom::{default_window, pulsed_g2_from_histogram, CorrelationHistogram};
use cavsps_core::observables::{detector_convolve, g2_cw};
use cavsps_core::qed::Detection;
use clap::{Args, ValueEnum};

use super::{load_config, parse_projector, Report};
use crate::error::{CliError, Result};
use crate::table::DataTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Cw,
    PulsedAnalyze,
}

#[derive(Debug, Args)]
pub struct G2Args {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Histogram CSV (bin_center_ns, counts) for pulsed-analyze.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_projector, default_value = "none")]
    pub projector: Detection,
    /// Fail unless a [detector] calibration is configured.
    #[arg(long)]
    pub convolve: bool,
    /// Repetition period in ns (default: splitters.period_ns).
    #[arg(long)]
    pub period: Option<f64>,
    /// Half-width of the integration window in ns (default: period / 4).
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn run(config: Option<&Path>, args: &G2Args) -> Result<()> {
    let cfg = load_config(config)?;
    match args.mode {
        Mode::Cw => {
            let params = cfg.params()?;
            let response = match (&cfg.detector, args.convolve) {
                (Some(d), _) => Some(d.response()?),
                (None, true) => {
                    return Err(CliError::Config(
                        "--convolve needs a [detector] calibration".into(),
                    ))
                }
                (None, false) => None,
            };
            let tau = cfg.scan.delays();
            let raw = g2_cw(&params, &cfg.space()?, &args.projector, &tau)?;
            let convolved = response.map(|r| detector_convolve(&raw, &r)).transpose()?;
            let mut columns = vec!["tau_ns", "g2_raw"];
            if convolved.is_some() {
                columns.push("g2_convolved");
            }
            let mut table = DataTable::new(columns);
            let start = raw.tau.iter().position(|t| *t >= 0.0).unwrap_or(0);
            for k in start..raw.len() {
                let mut row = vec![raw.tau[k], raw.values[k]];
                if let Some(c) = &convolved {
                    row.push(c.values[k]);
                }
                table.push(row)?;
            }
            table.emit(args.output.as_deref())
        }
        Mode::PulsedAnalyze => {
            let path = args
                .input
                .as_deref()
                .ok_or_else(|| CliError::Config("pulsed-analyze needs --input".into()))?;
            let hist = read_histogram(path)?;
            let period = args.period.unwrap_or(cfg.splitters.period_ns);
            let window = args.window.unwrap_or_else(|| default_window(period));
            let g = pulsed_g2_from_histogram(&hist, period, window)?;
            Report::default()
                .estimate("g2_zero", g.value, Some(g.sigma))
                .print();
            Ok(())
        }
    }
}

pub fn read_histogram(path: &Path) -> Result<CorrelationHistogram> {
    let table = DataTable::read(path)?;
    let centers = table.require("bin_center_ns", path)?;
    let counts = table.require("counts", path)?;
    if counts.iter().any(|c| *c < 0.0) {
        return Err(CliError::data(path, "counts must be non-negative"));
    }
    CorrelationHistogram::from_centers(&centers, counts)
        .map_err(|e| CliError::data(path, e.to_string()))
}

pub fn histogram_table(hist: &CorrelationHistogram) -> Result<DataTable> {
    let mut t = DataTable::new(["bin_center_ns", "counts"]);
    for (c, n) in hist.centers().into_iter().zip(hist.counts()) {
        t.push(vec![c, *n])?;
    }
    Ok(t)
}
