use std::path::{Path, PathBuf};

use cavsps_core::fitting::{synthetic_detector_curve, synthetic_saturation, synthetic_spectrum};
use cavsps_core::hom::CorrelationHistogram;
use cavsps_core::observables::{DetectorResponse, SaturationModel, SpectrumModel};
use cavsps_core::qed::Detection;
use clap::{Args, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::g2::histogram_table;
use super::spectrum::Model;
use super::{load_config, parse_projector};
use crate::config::linspace;
use crate::error::{CliError, Result};
use crate::table::DataTable;

/// Noisy synthetic data in the formats read by `fit`.
#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(subcommand)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 0.01, global = true)]
    pub noise: f64,
    #[arg(long, default_value_t = 1, global = true)]
    pub seed: u64,
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Transmission spectrum on the configured frequency grid.
    Spectrum {
        #[arg(long, value_parser = parse_projector, default_value = "none")]
        projector: Detection,
        #[arg(long, value_enum, default_value = "weak")]
        model: Model,
    },
    /// Count rate and g²(0) versus power.
    Saturation {
        #[arg(long, default_value_t = 2.0e6)]
        r_max: f64,
        #[arg(long, default_value_t = 1.0)]
        p_sat: f64,
        #[arg(long, default_value_t = 0.0)]
        c_leak: f64,
        #[arg(long, default_value_t = 0.02)]
        g2_single: f64,
        #[arg(long, default_value_t = 0.01)]
        g2_noise: f64,
        #[arg(long, default_value_t = 10.0)]
        max_power: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Pulsed Hanbury Brown-Twiss histogram with Poisson counts.
    Histogram {
        #[arg(long, default_value_t = 0.037)]
        g2: f64,
        /// Mean counts in each side peak.
        #[arg(long, default_value_t = 20_000.0)]
        side_counts: f64,
        #[arg(long, default_value_t = 12.5)]
        period: f64,
        #[arg(long, default_value_t = 0.3)]
        lifetime: f64,
        #[arg(long, default_value_t = 0.05)]
        bin_width: f64,
        /// Number of side peaks on each side of zero.
        #[arg(long, default_value_t = 3)]
        peaks: i32,
    },
    /// Detector-pair timing calibration histogram.
    Detector {
        #[arg(long, default_value_t = 1.0)]
        weight: f64,
        #[arg(long, default_value_t = 0.35)]
        tau1: f64,
        #[arg(long, default_value_t = 0.35)]
        tau2: f64,
        #[arg(long, default_value_t = 1.0e5)]
        area: f64,
        #[arg(long, default_value_t = 5.0)]
        range: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
}

pub fn run(config: Option<&Path>, args: &SynthArgs) -> Result<()> {
    let table = match &args.kind {
        SynthKind::Spectrum { projector, model } => {
            let cfg = load_config(config)?;
            let model = match model {
                Model::Weak => SpectrumModel::WeakDrive,
                Model::Master => SpectrumModel::MasterEquation(cfg.space()?),
            };
            let d = synthetic_spectrum(
                &cfg.params()?,
                model,
                projector,
                &cfg.scan.frequencies(),
                args.noise,
                args.seed,
            )?;
            let mut t = DataTable::new(["freq_ghz", "transmission"]);
            for (f, y) in d.freqs.iter().zip(&d.values) {
                t.push(vec![*f, *y])?;
            }
            t
        }
        SynthKind::Saturation {
            r_max,
            p_sat,
            c_leak,
            g2_single,
            g2_noise,
            max_power,
            points,
        } => {
            let model = SaturationModel::new(*r_max, *p_sat, *c_leak)?;
            // Log-spaced powers from max_power / 1000.
            let powers: Vec<f64> = linspace((max_power / 1000.0).ln(), max_power.ln(), *points)
                .into_iter()
                .map(f64::exp)
                .collect();
            let d = synthetic_saturation(
                &model, *g2_single, &powers, args.noise, *g2_noise, args.seed,
            )?;
            let mut t = DataTable::new(["power_nw", "rate_cps", "g2"]);
            let g2 = d.g2.clone().unwrap_or_default();
            for ((p, r), g) in d.powers.iter().zip(&d.rates).zip(&g2) {
                t.push(vec![*p, *r, *g])?;
            }
            t
        }
        SynthKind::Histogram {
            g2,
            side_counts,
            period,
            lifetime,
            bin_width,
            peaks,
        } => {
            let hist = hbt_histogram(
                *g2,
                *side_counts,
                *period,
                *lifetime,
                *bin_width,
                *peaks,
                args.seed,
            )?;
            histogram_table(&hist)?
        }
        SynthKind::Detector {
            weight,
            tau1,
            tau2,
            area,
            range,
            points,
        } => {
            let response = DetectorResponse::new(*weight, *tau1, *tau2)?;
            let tau = linspace(-range, *range, *points);
            let c = synthetic_detector_curve(&response, *area, &tau, args.noise, args.seed)?;
            let mut t = DataTable::new(["tau_ns", "counts"]);
            for (x, y) in c.tau.iter().zip(&c.values) {
                t.push(vec![*x, *y])?;
            }
            t
        }
    };
    table.emit(args.output.as_deref())
}

/// Two-sided exponential peaks every `period`, the zero-delay one scaled by
/// `g2`, sampled bin by bin from Poisson distributions.
fn hbt_histogram(
    g2: f64,
    side_counts: f64,
    period: f64,
    lifetime: f64,
    bin_width: f64,
    peaks: i32,
    seed: u64,
) -> Result<CorrelationHistogram> {
    let ok = g2 >= 0.0
        && side_counts > 0.0
        && period > 0.0
        && lifetime > 0.0
        && bin_width > 0.0
        && peaks >= 1;
    if !ok {
        return Err(CliError::Config(
            "histogram parameters must be positive".into(),
        ));
    }
    let half = (((peaks as f64 + 0.5) * period) / bin_width).round() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = (-half..=half)
        .map(|k| {
            let t = k as f64 * bin_width;
            let mean: f64 = (-peaks..=peaks)
                .map(|p| {
                    let area = if p == 0 {
                        g2 * side_counts
                    } else {
                        side_counts
                    };
                    area * bin_width / (2.0 * lifetime)
                        * (-(t - p as f64 * period).abs() / lifetime).exp()
                })
                .sum();
            if mean > 0.0 {
                Poisson::new(mean).expect("positive mean").sample(&mut rng)
            } else {
                0.0
            }
        })
        .collect();
    Ok(CorrelationHistogram::uniform(
        -(half as f64) * bin_width,
        bin_width,
        counts,
    )?)
}
