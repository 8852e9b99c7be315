//! Closed-form device figures of merit.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Gaussian beam or cavity mode characterized by its waist (µm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMode {
    waist: f64,
}

impl GaussianMode {
    pub fn new(waist: f64) -> Result<Self> {
        ensure(waist.is_finite() && waist > 0.0, || {
            format!("mode waist must be > 0, got {waist}")
        })?;
        Ok(Self { waist })
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }
}

/// Power overlap of two Gaussian modes with a transverse offset `u` (µm),
/// ignoring wavefront curvature.
pub fn coupling_efficiency(fiber: GaussianMode, cavity: GaussianMode, u: f64) -> f64 {
    let (wf, wc) = (fiber.waist, cavity.waist);
    let s = wf * wf + wc * wc;
    (2.0 * wf * wc / s).powi(2) * (-2.0 * u * u / s).exp()
}

/// QD-cavity cooperativity `g² / (κ (γ∥/2 + γ*))`.
pub fn cooperativity(g: f64, kappa: f64, gamma_par: f64, gamma_star: f64) -> Result<f64> {
    let denom = kappa * (0.5 * gamma_par + gamma_star);
    ensure(denom.is_finite() && denom > 0.0, || {
        format!("cooperativity denominator must be > 0, got {denom}")
    })?;
    Ok(g * g / denom)
}

/// Purcell factor `C + 1`.
pub fn purcell(cooperativity: f64) -> f64 {
    cooperativity + 1.0
}

/// Linear Stark tuning of one QD transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarkMap {
    /// Reference gate voltage (V).
    pub v0: f64,
    /// Transition frequency at `v0` (GHz).
    pub f0: f64,
    /// Tuning slope (GHz/V).
    pub slope: f64,
}

impl StarkMap {
    pub fn new(v0: f64, f0: f64, slope: f64) -> Self {
        Self { v0, f0, slope }
    }

    /// Maps for the X and Y transitions placed at their reference-device
    /// frequencies at 0.935 V, sharing the given slope.
    pub fn reference_pair(slope: f64) -> (Self, Self) {
        (Self::new(0.935, -3.6, slope), Self::new(0.935, 0.3, slope))
    }

    pub fn frequency(&self, voltage: f64) -> f64 {
        stark_map(self, voltage)
    }
}

pub fn stark_map(map: &StarkMap, voltage: f64) -> f64 {
    map.f0 + map.slope * (voltage - map.v0)
}

/// Photons per pulse at the point where `total_efficiency` is referenced.
pub fn brightness(detected_rate: f64, rep_rate: f64, total_efficiency: f64) -> Result<f64> {
    ensure(rep_rate.is_finite() && rep_rate > 0.0, || {
        format!("repetition rate must be > 0, got {rep_rate}")
    })?;
    ensure(total_efficiency > 0.0 && total_efficiency <= 1.0, || {
        format!("total efficiency must be in (0, 1], got {total_efficiency}")
    })?;
    Ok(detected_rate / (rep_rate * total_efficiency))
}
