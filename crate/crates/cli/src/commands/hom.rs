use std::path::{Path, PathBuf};

use cavsps_core::hom::{
    delay_table, extract_with_uncertainty, fit_double_exponential_peaks, monte_carlo_hom,
    predict_peak_areas, CorrelationHistogram, HomSimulation, InputUncertainties, PeakAreas,
    SplitterParams,
};
use clap::Args;

use super::g2::{histogram_table, read_histogram};
use super::{load_config, Report};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::table::DataTable;

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["input", "simulate", "ratio"])))]
pub struct HomArgs {
    /// Coincidence histogram CSV (bin_center_ns, counts).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generate the histogram by Monte Carlo instead of reading one.
    #[arg(long)]
    pub simulate: bool,
    /// Measured center-to-side peak area ratio.
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub ratio_sigma: f64,
    /// g²(0) of the source.
    #[arg(long, default_value_t = 0.0)]
    pub g2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub g2_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub visibility_sigma: f64,
    /// Overrides for the configured splitter.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Indistinguishability used by --simulate.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 100_000)]
    pub periods: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Largest simulated delay in ns (default: 2.5 periods, enough for the
    /// pulsed g² analysis).
    #[arg(long)]
    pub max_delay: Option<f64>,
    /// Half-range in ns of the histogram used for the peak fit
    /// (default: interferometer delay + half the remaining period).
    #[arg(long)]
    pub fit_range: Option<f64>,
    /// Peak-area table output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Simulated histogram output (with --simulate).
    #[arg(long)]
    pub histogram_output: Option<PathBuf>,
}

fn splitter(cfg: &RunConfig, args: &HomArgs) -> Result<SplitterParams> {
    let s = &cfg.splitters;
    let r = args.r.unwrap_or(s.r);
    let t = args
        .t
        .unwrap_or_else(|| if args.r.is_some() { 1.0 - r } else { s.t });
    Ok(SplitterParams::new(
        r,
        t,
        args.visibility.unwrap_or(s.visibility),
    )?)
}

pub fn run(config: Option<&Path>, args: &HomArgs) -> Result<()> {
    let cfg = load_config(config)?;
    let split = splitter(&cfg, args)?;
    let train = cfg.splitters.train()?;
    let mz = cfg.splitters.mz_delay_ns;
    let table = delay_table(&train, mz)?;
    let mut report = Report::default();

    if let Some(ratio) = args.ratio {
        let m = extract_with_uncertainty(
            ratio,
            args.g2,
            &split,
            &uncertainties(args, args.ratio_sigma),
        )?;
        report.estimate("M", m.value, Some(m.sigma)).print();
        return Ok(());
    }

    let hist = if args.simulate {
        let sim = HomSimulation {
            max_delay: args.max_delay.unwrap_or(2.5 * train.period()),
            ..HomSimulation::new(train.clone(), mz, split, args.m, args.g2)
        };
        let h = monte_carlo_hom(&sim, args.periods, args.seed)?;
        if let Some(p) = &args.histogram_output {
            histogram_table(&h)?.emit(Some(p))?;
        }
        report
            .count("periods", args.periods as u64)
            .count("seed", args.seed);
        h
    } else {
        read_histogram(args.input.as_deref().expect("clap enforces one source"))?
    };

    // With M = 0 every peak of the pattern has nonzero area.
    let pattern = predict_peak_areas(&table, &split, 0.0, args.g2)?;
    let analysis = analyze(&hist, &pattern, mz, train.period(), args.fit_range)?;
    let m = extract_with_uncertainty(
        analysis.ratio,
        args.g2,
        &split,
        &uncertainties(args, analysis.ratio_sigma),
    )?;
    let predicted = predict_peak_areas(&table, &split, m.value.clamp(0.0, 1.0), args.g2)?;
    report
        .estimate("ratio", analysis.ratio, Some(analysis.ratio_sigma))
        .value("tau_r_ns", analysis.tau)
        .estimate("M", m.value, Some(m.sigma));
    if !analysis.converged {
        report.print();
        return Err(CliError::NotConverged("peak fit".into()));
    }
    report.print();

    // Areas predicted at the extracted M, scaled to the fitted side peaks.
    let scale = analysis.side / (predicted.area_at(-mz) + predicted.area_at(mz));
    let mut out = DataTable::new(["delay_ns", "predicted_area", "fitted_area"]);
    for (c, a) in analysis
        .areas
        .iter()
        .filter(|(c, _)| c.abs() <= analysis.range)
    {
        out.push(vec![*c, predicted.area_at(*c) * scale, *a])?;
    }
    out.emit(args.output.as_deref())
}

fn uncertainties(args: &HomArgs, ratio_sigma: f64) -> InputUncertainties {
    InputUncertainties {
        ratio: ratio_sigma,
        g2_zero: args.g2_sigma,
        visibility: args.visibility_sigma,
    }
}

struct Analysis {
    ratio: f64,
    ratio_sigma: f64,
    side: f64,
    range: f64,
    tau: f64,
    converged: bool,
    areas: Vec<(f64, f64)>,
}

/// Fits exponential peaks at the predicted delays and forms the center to
/// side-peak (±interferometer delay) area ratio. The ratio uncertainty
/// assumes Poisson statistics of the fitted areas.
fn analyze(
    hist: &CorrelationHistogram,
    pattern: &PeakAreas,
    mz: f64,
    period: f64,
    range: Option<f64>,
) -> Result<Analysis> {
    let range = range.unwrap_or(mz + 0.5 * (period - mz));
    let cropped = hist.crop(-range, range);
    if cropped.len() < 3 {
        return Err(CliError::Config(format!(
            "histogram has fewer than 3 bins within ±{range} ns"
        )));
    }
    let reach = range + 0.25 * period;
    let centers: Vec<f64> = pattern
        .peaks
        .iter()
        .map(|p| p.0)
        .filter(|c| c.abs() <= reach)
        .collect();
    let fit = fit_double_exponential_peaks(&cropped, &centers, true)?;
    let area = |c: f64| fit.area_near(c).unwrap_or(0.0);
    let center = area(0.0);
    let side = area(-mz) + area(mz);
    if side <= 0.0 {
        return Err(CliError::Numerical(cavsps_core::Error::EmptySidePeaks));
    }
    let ratio = center / side;
    let bw = hist.bin_width();
    // Areas are in counts once divided by the bin width.
    let (nc, ns) = (center / bw, side / bw);
    let ratio_sigma = ratio * (1.0 / nc.max(1.0) + 1.0 / ns).sqrt();
    Ok(Analysis {
        ratio,
        ratio_sigma,
        side,
        range,
        tau: fit.tau(),
        converged: fit.converged,
        areas: centers.iter().map(|&c| (c, area(c))).collect(),
    })
}
