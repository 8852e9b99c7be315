use serde::{Deserialize, Serialize};

use super::areas::Estimate;
use crate::error::ensure;
use crate::{Error, Result};

/// Coincidence counts on uniform delay bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    first_center: f64,
    bin_width: f64,
    counts: Vec<f64>,
}

impl CorrelationHistogram {
    pub fn uniform(first_center: f64, bin_width: f64, counts: Vec<f64>) -> Result<Self> {
        ensure(bin_width.is_finite() && bin_width > 0.0, || {
            format!("bin width must be > 0, got {bin_width}")
        })?;
        ensure(first_center.is_finite(), || {
            "first bin center must be finite".into()
        })?;
        ensure(counts.iter().all(|c| c.is_finite() && *c >= 0.0), || {
            "counts must be finite and >= 0".into()
        })?;
        Ok(Self {
            first_center,
            bin_width,
            counts,
        })
    }

    /// From explicit bin centers, which must be evenly spaced to 1e-4 of the
    /// bin width (allowing for centers read back from rounded text).
    pub fn from_centers(centers: &[f64], counts: Vec<f64>) -> Result<Self> {
        if centers.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                found: counts.len(),
            });
        }
        ensure(centers.len() >= 2, || {
            "histogram needs at least two bins".into()
        })?;
        let n = centers.len();
        let width = (centers[n - 1] - centers[0]) / (n - 1) as f64;
        ensure(
            centers
                .windows(2)
                .all(|w| ((w[1] - w[0]) - width).abs() <= 1e-4 * width.abs()),
            || "bin centers must be uniformly spaced".into(),
        )?;
        Self::uniform(centers[0], width, counts)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn center(&self, k: usize) -> f64 {
        self.first_center + k as f64 * self.bin_width
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|k| self.center(k)).collect()
    }

    /// Lower edge of the first bin and upper edge of the last.
    pub fn span(&self) -> (f64, f64) {
        let h = 0.5 * self.bin_width;
        (
            self.first_center - h,
            self.center(self.counts.len().saturating_sub(1)) + h,
        )
    }

    /// Indices of bins whose centers lie within `center ± half_window`.
    pub fn bins_within(&self, center: f64, half_window: f64) -> std::ops::Range<usize> {
        let eps = 1e-9 * self.bin_width;
        let lo = ((center - half_window - eps - self.first_center) / self.bin_width)
            .ceil()
            .max(0.0) as usize;
        let hi = ((center + half_window + eps - self.first_center) / self.bin_width).floor();
        if hi < 0.0 {
            return 0..0;
        }
        let end = ((hi as usize) + 1).min(self.counts.len());
        lo.min(end)..end
    }

    pub fn integrate(&self, center: f64, half_window: f64) -> f64 {
        self.counts[self.bins_within(center, half_window)]
            .iter()
            .sum()
    }

    /// Sub-histogram of bins with centers in `[lo, hi]`.
    pub fn crop(&self, lo: f64, hi: f64) -> Self {
        let mid = 0.5 * (lo + hi);
        let range = self.bins_within(mid, 0.5 * (hi - lo));
        Self {
            first_center: self.center(range.start),
            bin_width: self.bin_width,
            counts: self.counts[range].to_vec(),
        }
    }
}

/// Default integration half-window: a quarter of the repetition period.
pub fn default_window(rep_period: f64) -> f64 {
    0.25 * rep_period
}

/// Pulsed `g²(0)`: counts in the zero-delay peak over the mean of the four
/// nearest side peaks (`±T_rep`, `±2T_rep`), with Poisson errors.
pub fn pulsed_g2_from_histogram(
    hist: &CorrelationHistogram,
    rep_period: f64,
    window: f64,
) -> Result<Estimate> {
    ensure(rep_period.is_finite() && rep_period > 0.0, || {
        format!("repetition period must be > 0, got {rep_period}")
    })?;
    ensure(window > 0.0 && window < 0.5 * rep_period, || {
        format!("window must be in (0, period/2), got {window}")
    })?;
    let (lo, hi) = hist.span();
    let reach = 2.0 * rep_period + window;
    ensure(
        lo <= -reach + 0.5 * hist.bin_width && hi >= reach - 0.5 * hist.bin_width,
        || format!("histogram [{lo}, {hi}] does not cover the peaks at ±2 periods"),
    )?;
    let center = hist.integrate(0.0, window);
    let sides: f64 = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|k| hist.integrate(k * rep_period, window))
        .sum();
    if !(sides > 0.0) {
        return Err(Error::EmptySidePeaks);
    }
    let value = 4.0 * center / sides;
    let sigma = 4.0 / sides * (center + center * center / sides).sqrt();
    Ok(Estimate { value, sigma })
}
