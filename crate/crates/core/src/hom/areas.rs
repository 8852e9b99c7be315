use serde::{Deserialize, Serialize};

use super::train::{quantize, DelayTable, SplitterParams};
use crate::error::ensure;
use crate::Result;

/// Value with a one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// Relative coincidence probabilities per period, keyed by signed delay.
///
/// Units: one for each pair of single photons from distinct pulses. Pairs
/// removed from the coincidence channel by two-photon interference are kept
/// in `bunched`, so the total does not depend on the indistinguishability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAreas {
    /// `(delay, area)` sorted by delay.
    pub peaks: Vec<(f64, f64)>,
    pub bunched: f64,
}

impl PeakAreas {
    fn add(&mut self, delay: f64, area: f64) {
        let d = quantize(delay);
        match self.peaks.iter_mut().find(|(t, _)| *t == d) {
            Some(p) => p.1 += area,
            None => self.peaks.push((d, area)),
        }
    }

    pub fn area_at(&self, delay: f64) -> f64 {
        let d = quantize(delay);
        self.peaks
            .iter()
            .find(|(t, _)| *t == d)
            .map_or(0.0, |p| p.1)
    }

    pub fn center(&self) -> f64 {
        self.area_at(0.0)
    }

    /// Areas summed over `±τ`, keyed by `|τ|`.
    pub fn folded(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &(t, a) in &self.peaks {
            let key = t.abs();
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some(p) => p.1 += a,
                None => out.push((key, a)),
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// Coincidences plus the interference-bunched pairs.
    pub fn total(&self) -> f64 {
        self.peaks.iter().map(|p| p.1).sum::<f64>() + self.bunched
    }

    /// Center-peak area over the summed side peaks at `±side_delay`.
    pub fn center_to_side_ratio(&self, side_delay: f64) -> f64 {
        self.center() / (self.area_at(side_delay) + self.area_at(-side_delay))
    }
}

/// Pathway counting over the delay table.
///
/// Each table pair contributes for each arm path its path probability times
/// the probability that the photons leave through different ports; the sign
/// of the delay follows which photon reaches detector 2. Pairs that meet at
/// the final splitter (first photon long, second short, equal arrival) lose
/// `2(1−ε)² M R²T²` to two-photon interference. Multi-photon pulses add, per
/// pulse, `g²(0)/2` photon pairs emitted together.
pub fn predict_peak_areas(
    table: &DelayTable,
    split: &SplitterParams,
    m: f64,
    g2_zero: f64,
) -> Result<PeakAreas> {
    split.validate()?;
    ensure((0.0..=1.0).contains(&m), || {
        format!("indistinguishability must be in [0, 1], got {m}")
    })?;
    ensure(g2_zero.is_finite() && g2_zero >= 0.0, || {
        format!("g2(0) must be >= 0, got {g2_zero}")
    })?;
    let (r, t) = (split.r, split.t);
    let rt = r * t;
    let hom = 2.0 * split.visibility.powi(2) * m * r * r * t * t;
    let mut areas = PeakAreas {
        peaks: Vec::new(),
        bunched: 0.0,
    };

    for pair in &table.pairs {
        let d = pair.delay;
        areas.add(d, (r * r + t * t) * rt);
        areas.add(-d, (r * r + t * t) * rt);
        // First photon long: detector 1 behind R for it, detector 2 behind R for the short one.
        let early = quantize(d - table.mz_delay);
        areas.add(early, rt * r * r);
        areas.add(-early, rt * t * t);
        if early == 0.0 {
            areas.add(0.0, -hom);
            areas.bunched += hom;
        }
        let late = quantize(d + table.mz_delay);
        areas.add(late, rt * t * t);
        areas.add(-late, rt * r * r);
    }

    let per_pulse = 0.5 * g2_zero;
    for _ in table.train.times() {
        areas.add(0.0, per_pulse * 2.0 * rt * (r * r + t * t));
        // Mixed arms: the short-arm photon arrives first.
        areas.add(table.mz_delay, per_pulse * 2.0 * rt * t * t);
        areas.add(-table.mz_delay, per_pulse * 2.0 * rt * r * r);
    }
    areas.peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(areas)
}

fn check_optics(split: &SplitterParams) -> Result<()> {
    split.validate()?;
    ensure(split.r * split.t > 0.0, || "R·T must be > 0".into())?;
    ensure(split.visibility > 0.0, || "visibility must be > 0".into())
}

/// Indistinguishability from the center-to-side ratio
/// `A(0) / (A(−τ_MZ) + A(τ_MZ))`.
pub fn extract_indistinguishability(
    ratio: f64,
    g2_zero: f64,
    split: &SplitterParams,
) -> Result<f64> {
    check_optics(split)?;
    let (r, t, v) = (split.r, split.t, split.visibility);
    let k = (r * r + t * t) / (2.0 * r * t) / (v * v);
    Ok(k * ((1.0 + 2.0 * g2_zero) - ratio * (2.0 + 2.0 * g2_zero)))
}

/// One-sigma input uncertainties for [`extract_with_uncertainty`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InputUncertainties {
    pub ratio: f64,
    pub g2_zero: f64,
    pub visibility: f64,
}

/// Indistinguishability with first-order uncertainty propagation,
/// independent inputs added in quadrature.
pub fn extract_with_uncertainty(
    ratio: f64,
    g2_zero: f64,
    split: &SplitterParams,
    sigma: &InputUncertainties,
) -> Result<Estimate> {
    let m = extract_indistinguishability(ratio, g2_zero, split)?;
    let (r, t, v) = (split.r, split.t, split.visibility);
    let k = (r * r + t * t) / (2.0 * r * t) / (v * v);
    let d_ratio = -k * (2.0 + 2.0 * g2_zero);
    let d_g2 = k * (2.0 - 2.0 * ratio);
    let d_vis = -2.0 * m / v;
    let var = (d_ratio * sigma.ratio).powi(2)
        + (d_g2 * sigma.g2_zero).powi(2)
        + (d_vis * sigma.visibility).powi(2);
    Ok(Estimate {
        value: m,
        sigma: var.sqrt(),
    })
}

/// Probability `p` of a second photon per pulse such that a pulse carrying
/// one photon, or two with probability `p`, has `g²(0) = 2p/(1+p)²`.
pub fn two_photon_probability(g2_zero: f64) -> Result<f64> {
    ensure((0.0..=0.5).contains(&g2_zero), || {
        format!("g2(0) must be in [0, 0.5] for this model, got {g2_zero}")
    })?;
    // Smaller root of g p² + 2(g − 1) p + g = 0, in cancellation-free form.
    Ok(g2_zero / ((1.0 - g2_zero) + (1.0 - 2.0 * g2_zero).sqrt()))
}
