use serde::{Deserialize, Serialize};

use super::{detector_convolve, CorrelationCurve, DetectorResponse};
use crate::error::ensure;
use crate::{Error, Result};

/// Detected count rate as saturating single-photon emission plus linear
/// laser leakage through the crossed polarizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationModel {
    /// Saturated single-photon count rate (counts/s).
    pub r_max: f64,
    /// Saturation power (nW).
    pub p_sat: f64,
    /// Leaked laser counts per nW (counts/s/nW).
    pub c_leak: f64,
}

impl SaturationModel {
    pub fn new(r_max: f64, p_sat: f64, c_leak: f64) -> Result<Self> {
        let m = Self {
            r_max,
            p_sat,
            c_leak,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.r_max.is_finite() && self.r_max >= 0.0, || {
            format!("r_max must be >= 0, got {}", self.r_max)
        })?;
        ensure(self.p_sat.is_finite() && self.p_sat > 0.0, || {
            format!("p_sat must be > 0, got {}", self.p_sat)
        })?;
        ensure(self.c_leak.is_finite() && self.c_leak >= 0.0, || {
            format!("c_leak must be >= 0, got {}", self.c_leak)
        })?;
        Ok(())
    }

    pub fn single_photon_rate(&self, power: f64) -> f64 {
        let x = power / self.p_sat;
        self.r_max * x / (1.0 + x)
    }

    pub fn leak_rate(&self, power: f64) -> f64 {
        self.c_leak * power
    }
}

pub fn count_rate_model(power: f64, model: &SaturationModel) -> f64 {
    model.single_photon_rate(power) + model.leak_rate(power)
}

/// `g²` of an antibunched stream at rate `s` merged with an independent
/// coherent stream at rate `c`.
pub fn g2_mixture(s: f64, c: f64, g2_single: f64) -> Result<f64> {
    let total = s + c;
    ensure(total > 0.0, || {
        format!("total rate must be > 0, got {total}")
    })?;
    Ok((s * s * g2_single + 2.0 * s * c + c * c) / (total * total))
}

/// Applies [`g2_mixture`] at every delay of a single-emitter curve.
pub fn mixture_curve(s: f64, c: f64, g2_single: &CorrelationCurve) -> Result<CorrelationCurve> {
    let values = g2_single
        .values
        .iter()
        .map(|g| g2_mixture(s, c, *g))
        .collect::<Result<_>>()?;
    Ok(CorrelationCurve {
        tau: g2_single.tau.clone(),
        values,
    })
}

/// Measured `g²(0)` against excitation power: the single-emitter curve at
/// each power is mixed with leaked laser light in the ratio given by `sat`,
/// then optionally smeared by the detector response.
pub fn g2_power_curve(
    sat: &SaturationModel,
    g2_single: impl Fn(f64) -> Result<CorrelationCurve>,
    response: Option<&DetectorResponse>,
    powers: &[f64],
) -> Result<Vec<f64>> {
    sat.validate()?;
    powers
        .iter()
        .map(|&p| {
            if !(p >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "power must be >= 0, got {p}"
                )));
            }
            let mixed = mixture_curve(sat.single_photon_rate(p), sat.leak_rate(p), &g2_single(p)?)?;
            Ok(match response {
                Some(r) => detector_convolve(&mixed, r)?.at_zero(),
                None => mixed.at_zero(),
            })
        })
        .collect()
}
