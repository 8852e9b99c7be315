use std::fmt;

use serde::{Deserialize, Serialize};

use super::minimize::{minimize, Bound, FitProblem, FitResult};
use crate::device::StarkMap;
use crate::error::ensure;
use crate::observables::{
    count_rate_model, empty_cavity_spectrum, g2_mixture, CorrelationCurve, DetectorResponse,
    SaturationModel, Spectrum, SpectrumModel,
};
use crate::qed::{Detection, SystemParams};
use crate::{Error, Result};

/// Named values with one-sigma uncertainties, printed as `key = value ± sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub entries: Vec<(String, f64, Option<f64>)>,
    pub residual_norm: f64,
    pub converged: bool,
}

impl FitReport {
    fn new(names: &[&str], values: &[f64], result: &FitResult, index: &[usize]) -> Self {
        let entries = names
            .iter()
            .zip(values)
            .zip(index)
            .map(|((n, v), &i)| (n.to_string(), *v, result.sigma(i)))
            .collect();
        Self {
            entries,
            residual_norm: result.residual_norm,
            converged: result.converged,
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == name).map(|e| e.1)
    }
}

impl fmt::Display for FitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value, sigma) in &self.entries {
            match sigma {
                Some(s) => writeln!(f, "{name} = {value} ± {s}")?,
                None => writeln!(f, "{name} = {value}")?,
            }
        }
        writeln!(f, "residual_norm = {}", self.residual_norm)?;
        write!(f, "converged = {}", self.converged)
    }
}

/// Measured transmission for one drive and detection configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumData {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    pub detection: Detection,
    /// Drive polarization angle from H, degrees.
    pub drive_angle: f64,
}

impl SpectrumData {
    pub fn new(
        freqs: Vec<f64>,
        values: Vec<f64>,
        detection: Detection,
        drive_angle: f64,
    ) -> Result<Self> {
        if freqs.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: freqs.len(),
                found: values.len(),
            });
        }
        ensure(!freqs.is_empty(), || "spectrum data is empty".into())?;
        ensure(freqs.iter().chain(&values).all(|v| v.is_finite()), || {
            "spectrum data must be finite".into()
        })?;
        Ok(Self {
            freqs,
            values,
            detection,
            drive_angle,
        })
    }

    pub fn from_spectrum(s: &Spectrum) -> Result<Self> {
        Self::new(
            s.freqs.clone(),
            s.values.clone(),
            s.detection,
            s.params.drive_angle,
        )
    }

    /// Divides by a transmission scale (for example the cavity-stage one).
    pub fn normalized(&self, scale: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v / scale).collect(),
            ..self.clone()
        }
    }

    fn floor(&self) -> f64 {
        1e-3 * self
            .values
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()))
            .max(1e-300)
    }
}

/// Residuals relative to the data, appropriate for multiplicative noise.
fn relative(model: &[f64], data: &SpectrumData, out: &mut Vec<f64>) {
    let floor = data.floor();
    out.extend(
        model
            .iter()
            .zip(&data.values)
            .map(|(m, y)| (m - y) / y.abs().max(floor)),
    );
}

fn poison(datasets: &[SpectrumData]) -> Vec<f64> {
    vec![1e10; datasets.iter().map(|d| d.values.len()).sum()]
}

/// Bare-cavity parameters from spectra taken with the QD tuned away.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityFit {
    pub f_cav_h: f64,
    pub f_cav_v: f64,
    pub kappa: f64,
    /// Overall transmission scale of the data.
    pub scale: f64,
    pub result: FitResult,
}

impl CavityFit {
    pub fn splitting(&self) -> f64 {
        self.f_cav_v - self.f_cav_h
    }

    pub fn apply(&self, params: &SystemParams) -> SystemParams {
        SystemParams {
            f_cav_h: self.f_cav_h,
            f_cav_v: self.f_cav_v,
            kappa: self.kappa,
            ..*params
        }
    }

    pub fn report(&self) -> FitReport {
        let names = ["f_cav_h", "f_cavsplit", "kappa", "scale"];
        FitReport::new(
            &names,
            &[self.f_cav_h, self.splitting(), self.kappa, self.scale],
            &self.result,
            &[0, 1, 2, 3],
        )
    }
}

/// Fits the two-Lorentzian bare-cavity model (H frequency, splitting, κ and a
/// transmission scale) to one or more spectra.
pub fn fit_cavity_stage(datasets: &[SpectrumData], initial: &SystemParams) -> Result<CavityFit> {
    ensure(!datasets.is_empty(), || "cavity stage needs data".into())?;
    initial.validate()?;
    let model = |p: &[f64], d: &SpectrumData| -> Vec<f64> {
        let q = SystemParams {
            f_cav_h: p[0],
            f_cav_v: p[0] + p[1],
            kappa: p[2],
            drive_angle: d.drive_angle,
            ..*initial
        };
        empty_cavity_spectrum(&q, &d.detection, &d.freqs)
            .values
            .iter()
            .map(|v| p[3] * v)
            .collect()
    };
    let start = [
        initial.f_cav_h,
        initial.cavity_splitting(),
        initial.kappa.max(1e-3),
        1.0,
    ];
    let (peak_data, peak_model) = datasets.iter().fold((0.0f64, 0.0f64), |(a, b), d| {
        let m = model(&start, d);
        (
            a.max(d.values.iter().fold(0.0, |x, y| x.max(*y))),
            b.max(m.iter().fold(0.0, |x, y| x.max(*y))),
        )
    });
    let scale0 = if peak_model > 0.0 && peak_data > 0.0 {
        peak_data / peak_model
    } else {
        1.0
    };
    let residuals = |p: &[f64]| {
        let mut out = Vec::new();
        for d in datasets {
            relative(&model(p, d), d, &mut out);
        }
        out
    };
    let problem = FitProblem::new(residuals, vec![start[0], start[1], start[2], scale0])
        .with_bounds(vec![
            Bound::FREE,
            Bound::FREE,
            Bound::new(1e-3, 1e4),
            Bound::at_least(0.0),
        ])
        .with_steps(vec![1.0, 1.0, 0.1 * start[2], 0.1 * scale0]);
    let r = minimize(&problem)?;
    Ok(CavityFit {
        f_cav_h: r.params[0],
        f_cav_v: r.params[0] + r.params[1],
        kappa: r.params[2],
        scale: r.params[3],
        result: r,
    })
}

/// Settings for [`fit_qd_stage`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdStageOptions {
    pub model: SpectrumModel,
    /// Hold φ at its initial value (the four-parameter composition).
    pub fix_phi: bool,
    /// Hold the X transition frequency at its initial value.
    pub fix_f_qd_x: bool,
    pub max_iterations: usize,
}

impl Default for QdStageOptions {
    fn default() -> Self {
        Self {
            model: SpectrumModel::WeakDrive,
            fix_phi: false,
            fix_f_qd_x: false,
            max_iterations: 20_000,
        }
    }
}

/// QD parameters with the cavity held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct QdFit {
    pub params: SystemParams,
    pub result: FitResult,
}

impl QdFit {
    pub const NAMES: [&'static str; 6] =
        ["g", "gamma_par", "gamma_star", "f_qdsplit", "phi", "f_qd_x"];

    pub fn report(&self) -> FitReport {
        let p = &self.params;
        let values = [
            p.g,
            p.gamma_par,
            p.gamma_star,
            p.qd_splitting(),
            p.phi,
            p.f_qd_x,
        ];
        FitReport::new(&Self::NAMES, &values, &self.result, &[0, 1, 2, 3, 4, 5])
    }
}

fn qd_params(p: &[f64], base: &SystemParams) -> SystemParams {
    SystemParams {
        g: p[0],
        gamma_par: p[1],
        gamma_star: p[2],
        f_qd_x: p[5],
        f_qd_y: p[5] + p[3],
        phi: p[4],
        ..*base
    }
}

/// Fits g, γ∥, γ*, the fine-structure splitting, the polarization angle φ and
/// the X line position to normalized spectra, with the cavity parameters of
/// `cavity` held fixed. Starting values come from `cavity` as well.
pub fn fit_qd_stage(
    datasets: &[SpectrumData],
    cavity: &SystemParams,
    options: &QdStageOptions,
) -> Result<QdFit> {
    ensure(!datasets.is_empty(), || "QD stage needs data".into())?;
    cavity.validate()?;
    let residuals = |p: &[f64]| {
        let q = qd_params(p, cavity);
        let mut out = Vec::new();
        for d in datasets {
            let q = SystemParams {
                drive_angle: d.drive_angle,
                ..q
            };
            match options.model.spectrum(&q, &d.detection, &d.freqs) {
                Ok(s) => relative(&s.values, d, &mut out),
                Err(_) => return poison(datasets),
            }
        }
        out
    };
    let c = cavity;
    let start = vec![
        c.g,
        c.gamma_par.max(1e-3),
        c.gamma_star,
        c.qd_splitting(),
        c.phi,
        c.f_qd_x,
    ];
    let bounds = vec![
        Bound::at_least(0.0),
        Bound::new(1e-3, 100.0),
        Bound::new(0.0, 100.0),
        Bound::FREE,
        Bound::new(-90.0, 90.0),
        Bound::FREE,
    ];
    let steps = vec![
        0.2 * c.g.abs().max(1.0),
        0.3 * start[1],
        0.3 * start[2].max(0.1),
        0.5,
        5.0,
        0.5,
    ];
    let problem = FitProblem::new(residuals, start)
        .with_bounds(bounds)
        .with_steps(steps)
        .with_fixed(vec![
            false,
            false,
            false,
            false,
            options.fix_phi,
            options.fix_f_qd_x,
        ])
        .with_tolerance(1e-8)
        .with_max_iterations(options.max_iterations);
    let r = minimize(&problem)?;
    Ok(QdFit {
        params: qd_params(&r.params, cavity),
        result: r,
    })
}

/// Count rates and optionally `g²(0)` measured against power (nW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationData {
    pub powers: Vec<f64>,
    pub rates: Vec<f64>,
    pub g2: Option<Vec<f64>>,
}

impl SaturationData {
    pub fn new(powers: Vec<f64>, rates: Vec<f64>, g2: Option<Vec<f64>>) -> Result<Self> {
        let n = powers.len();
        for len in [Some(rates.len()), g2.as_ref().map(Vec::len)]
            .into_iter()
            .flatten()
        {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        ensure(powers.iter().all(|p| p.is_finite() && *p >= 0.0), || {
            "powers must be >= 0".into()
        })?;
        ensure(rates.iter().all(|r| r.is_finite()), || {
            "rates must be finite".into()
        })?;
        Ok(Self { powers, rates, g2 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationFit {
    pub model: SaturationModel,
    /// Zero-delay `g²` of the emitter alone, as seen through the detectors.
    pub g2_single: f64,
    /// The data do not pin down the saturation knee.
    pub degenerate: bool,
    pub result: FitResult,
}

impl SaturationFit {
    pub fn report(&self) -> FitReport {
        let m = &self.model;
        FitReport::new(
            &["r_max", "p_sat", "c_leak", "g2_single"],
            &[m.r_max, m.p_sat, m.c_leak, self.g2_single],
            &self.result,
            &[0, 1, 2, 3],
        )
    }
}

/// Expected noise of the saturation data, used to weight the residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationWeights {
    /// Relative count-rate noise.
    pub rate_rel_sigma: f64,
    /// Absolute `g²(0)` noise.
    pub g2_sigma: f64,
}

impl Default for SaturationWeights {
    fn default() -> Self {
        Self {
            rate_rel_sigma: 0.01,
            g2_sigma: 0.01,
        }
    }
}

/// Joint fit of the saturating count rate and the leakage-diluted `g²(0)`.
///
/// Detector smearing acts linearly on the mixture, so fitting the measured
/// `g²(0)` with an effective single-emitter value is equivalent to convolving
/// the full curves.
pub fn fit_saturation(data: &SaturationData, weights: &SaturationWeights) -> Result<SaturationFit> {
    ensure(data.powers.len() >= 5, || {
        format!(
            "saturation fit needs >= 5 points, got {}",
            data.powers.len()
        )
    })?;
    let (rate_sigma, g2_sigma) = (weights.rate_rel_sigma, weights.g2_sigma);
    ensure(rate_sigma > 0.0 && g2_sigma > 0.0, || {
        "saturation weights must be > 0".into()
    })?;
    let p_max = data.powers.iter().fold(0.0f64, |a, b| a.max(*b));
    let p_min_pos = data
        .powers
        .iter()
        .filter(|p| **p > 0.0)
        .fold(f64::INFINITY, |a, b| a.min(*b));
    ensure(p_max > 0.0, || {
        "saturation fit needs positive powers".into()
    })?;
    let r_peak = data.rates.iter().fold(0.0f64, |a, b| a.max(*b));
    let rate_floor = 1e-3 * r_peak.max(1e-300);
    let half = data
        .powers
        .iter()
        .zip(&data.rates)
        .find(|(_, r)| **r >= 0.5 * r_peak)
        .map_or(p_max, |(p, _)| *p)
        .max(p_min_pos);
    let g2_start = data.g2.as_ref().map_or(0.0, |g| {
        g.iter().fold(1.0f64, |a, b| a.min(*b)).clamp(0.0, 1.0)
    });

    let residuals = |p: &[f64]| {
        let m = SaturationModel {
            r_max: p[0],
            p_sat: p[1],
            c_leak: p[2],
        };
        let mut out: Vec<f64> = data
            .powers
            .iter()
            .zip(&data.rates)
            .map(|(pw, r)| (count_rate_model(*pw, &m) - r) / (rate_sigma * r.abs().max(rate_floor)))
            .collect();
        if let Some(g2) = &data.g2 {
            for (pw, g) in data.powers.iter().zip(g2) {
                let model =
                    g2_mixture(m.single_photon_rate(*pw), m.leak_rate(*pw), p[3]).unwrap_or(1.0);
                out.push((model - g) / g2_sigma);
            }
        }
        out
    };
    let start = vec![r_peak.max(1e-300), half, 1e-3 * r_peak / p_max, g2_start];
    let problem = FitProblem::new(residuals, start.clone())
        .with_bounds(vec![
            Bound::at_least(0.0),
            Bound::new(1e-3 * p_min_pos, 1e3 * p_max),
            Bound::at_least(0.0),
            Bound::new(0.0, 1.0),
        ])
        .with_fixed(vec![false, false, false, data.g2.is_none()])
        .with_steps(vec![
            0.2 * start[0],
            0.5 * start[1],
            0.1 * r_peak / p_max,
            0.05,
        ]);
    let r = minimize(&problem)?;
    let model = SaturationModel {
        r_max: r.params[0],
        p_sat: r.params[1],
        c_leak: r.params[2],
    };
    let rel_sigma = r.sigma(1).map(|s| s / model.p_sat);
    let degenerate = r.at_bound[1]
        || rel_sigma.is_none_or(|s| !(s < 0.5))
        || p_max < 0.5 * model.p_sat
        || p_min_pos > 2.0 * model.p_sat;
    Ok(SaturationFit {
        model,
        g2_single: r.params[3],
        degenerate,
        result: r,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorFit {
    pub response: DetectorResponse,
    /// Total counts under the calibration peak.
    pub area: f64,
    /// The two components are indistinguishable or one has no weight; the
    /// response is then reported as a single exponential.
    pub degenerate: bool,
    pub result: FitResult,
}

impl DetectorFit {
    pub fn report(&self) -> FitReport {
        let r = &self.response;
        FitReport::new(
            &["area", "weight", "tau1", "tau2"],
            &[self.area, r.weight, r.tau1, r.tau2],
            &self.result,
            &[0, 1, 2, 3],
        )
    }
}

/// Fits the unit-area double-exponential kernel (times a total count) to a
/// short-pulse calibration histogram.
pub fn fit_detector_response(data: &CorrelationCurve) -> Result<DetectorFit> {
    ensure(data.len() >= 5, || {
        "detector calibration needs >= 5 points".into()
    })?;
    let t = &data.tau;
    let y = &data.values;
    let floor = 1e-3 * y.iter().fold(0.0f64, |a, b| a.max(*b)).max(1e-300);
    let area0: f64 = t
        .windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| 0.5 * (tw[1] - tw[0]) * (yw[0] + yw[1]))
        .sum();
    let peak = y.iter().fold(0.0f64, |a, b| a.max(*b));
    let width = t
        .iter()
        .zip(y)
        .filter(|(_, v)| **v >= peak / std::f64::consts::E)
        .map(|(x, _)| x.abs())
        .fold(0.0, f64::max);
    let span = t[t.len() - 1] - t[0];
    let dt_min = t
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let w0 = width.max(dt_min);
    let residuals = |p: &[f64]| {
        let r = DetectorResponse {
            weight: p[1],
            tau1: p[2],
            tau2: p[3],
        };
        t.iter()
            .zip(y)
            .map(|(x, v)| (p[0] * r.density(*x) - v) / v.abs().max(floor))
            .collect::<Vec<f64>>()
    };
    let start = vec![area0.max(1e-300), 0.5, 0.5 * w0, 2.0 * w0];
    let tau_bound = Bound::new(0.01 * dt_min, span);
    let problem = FitProblem::new(residuals, start.clone())
        .with_bounds(vec![
            Bound::at_least(0.0),
            Bound::new(0.0, 1.0),
            tau_bound,
            tau_bound,
        ])
        .with_steps(vec![0.1 * start[0], 0.2, 0.3 * start[2], 0.3 * start[3]])
        .with_tolerance(1e-9);
    let r = minimize(&problem)?;
    let (mut w, mut t1, mut t2) = (r.params[1], r.params[2], r.params[3]);
    if t1 > t2 {
        std::mem::swap(&mut t1, &mut t2);
        w = 1.0 - w;
    }
    let close = (t2 - t1) <= 0.05 * t2;
    let lopsided = !(1e-3..=1.0 - 1e-3).contains(&w);
    let degenerate = close || lopsided;
    let response = if degenerate {
        let tau = if close {
            w * t1 + (1.0 - w) * t2
        } else if w > 0.5 {
            t1
        } else {
            t2
        };
        DetectorResponse::single_exponential(tau)?
    } else {
        DetectorResponse::new(w, t1, t2)?
    };
    Ok(DetectorFit {
        response,
        area: r.params[0],
        degenerate,
        result: r,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarkFit {
    pub slope: f64,
    pub x_map: StarkMap,
    pub y_map: StarkMap,
    pub result: FitResult,
}

/// Fits a common Stark slope (GHz/V) to spectra taken at several gate
/// voltages, with reference voltages and frequencies taken from `x_map` and
/// `y_map` (whose slopes are the starting guess).
pub fn fit_stark_slope(
    slices: &[(f64, SpectrumData)],
    params: &SystemParams,
    x_map: &StarkMap,
    y_map: &StarkMap,
    model: SpectrumModel,
) -> Result<StarkFit> {
    ensure(slices.len() >= 2, || {
        "slope fit needs at least two voltages".into()
    })?;
    let residuals = |p: &[f64]| {
        let mut out = Vec::new();
        for (v, d) in slices {
            let q = SystemParams {
                f_qd_x: x_map.f0 + p[0] * (v - x_map.v0),
                f_qd_y: y_map.f0 + p[0] * (v - y_map.v0),
                drive_angle: d.drive_angle,
                ..*params
            };
            match model.spectrum(&q, &d.detection, &d.freqs) {
                Ok(s) => relative(&s.values, d, &mut out),
                Err(_) => return vec![1e10; slices.iter().map(|s| s.1.values.len()).sum()],
            }
        }
        out
    };
    let s0 = x_map.slope;
    let problem = FitProblem::new(residuals, vec![s0]).with_steps(vec![0.1 * s0.abs().max(1.0)]);
    let r = minimize(&problem)?;
    let slope = r.params[0];
    Ok(StarkFit {
        slope,
        x_map: StarkMap { slope, ..*x_map },
        y_map: StarkMap { slope, ..*y_map },
        result: r,
    })
}
