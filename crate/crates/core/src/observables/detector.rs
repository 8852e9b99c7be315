use serde::{Deserialize, Serialize};

use super::CorrelationCurve;
use crate::error::ensure;
use crate::{Error, Result};

/// Two-sided double-exponential timing jitter of a detector pair.
///
/// `r(τ) = w e^{−|τ|/τ₁}/(2τ₁) + (1−w) e^{−|τ|/τ₂}/(2τ₂)`, unit area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorResponse {
    pub weight: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl DetectorResponse {
    pub fn new(weight: f64, tau1: f64, tau2: f64) -> Result<Self> {
        let r = Self { weight, tau1, tau2 };
        r.validate()?;
        Ok(r)
    }

    pub fn single_exponential(tau: f64) -> Result<Self> {
        Self::new(1.0, tau, tau)
    }

    /// Generic single-exponential jitter of 0.35 ns. This is a typical value
    /// for silicon avalanche photodiodes, not a calibration of any device; use
    /// a fitted response whenever calibration data exist.
    pub fn fallback() -> Self {
        Self {
            weight: 1.0,
            tau1: 0.35,
            tau2: 0.35,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure((0.0..=1.0).contains(&self.weight), || {
            format!("weight must be in [0, 1], got {}", self.weight)
        })?;
        ensure(self.tau1.is_finite() && self.tau1 > 0.0, || {
            format!("tau1 must be > 0, got {}", self.tau1)
        })?;
        ensure(self.tau2.is_finite() && self.tau2 > 0.0, || {
            format!("tau2 must be > 0, got {}", self.tau2)
        })?;
        Ok(())
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64)> {
        [(self.weight, self.tau1), (1.0 - self.weight, self.tau2)]
            .into_iter()
            .filter(|(w, _)| *w > 0.0)
    }

    pub fn density(&self, tau: f64) -> f64 {
        self.components()
            .map(|(w, t)| w * (-tau.abs() / t).exp() / (2.0 * t))
            .sum()
    }

    /// Shortest time constant carrying weight.
    pub fn min_tau(&self) -> f64 {
        self.components()
            .map(|(_, t)| t)
            .fold(f64::INFINITY, f64::min)
    }

    /// Kernel mass in the bin `[(k−½)dt, (k+½)dt]`.
    pub fn bin_weight(&self, k: i64, dt: f64) -> f64 {
        let k = k.unsigned_abs() as f64;
        self.components()
            .map(|(w, t)| {
                if k == 0.0 {
                    w * (1.0 - (-0.5 * dt / t).exp())
                } else {
                    0.5 * w * ((-(k - 0.5) * dt / t).exp() - (-(k + 0.5) * dt / t).exp())
                }
            })
            .sum()
    }
}

/// Convolves a uniformly sampled correlation curve with the detector
/// response. Samples beyond the grid are taken equal to the nearest end
/// value, so flat tails stay flat.
pub fn detector_convolve(
    curve: &CorrelationCurve,
    response: &DetectorResponse,
) -> Result<CorrelationCurve> {
    response.validate()?;
    let n = curve.len();
    let dt = match curve.uniform_spacing() {
        Some(dt) => dt,
        None if n == 1 => return Ok(curve.clone()),
        None => {
            return Err(Error::InvalidParameter(
                "convolution needs a uniform delay grid".into(),
            ))
        }
    };
    let limit = response.min_tau() / 4.0;
    if dt > limit {
        return Err(Error::GridTooCoarse { spacing: dt, limit });
    }
    let t_max = response.components().map(|(_, t)| t).fold(0.0, f64::max);
    let reach = ((40.0 * t_max / dt).ceil() as usize).max(1);
    let weights: Vec<f64> = (0..=reach as i64)
        .map(|k| response.bin_weight(k, dt))
        .collect();
    let total = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();

    let v = &curve.values;
    let sample = |j: i64| v[j.clamp(0, n as i64 - 1) as usize];
    let values = (0..n as i64)
        .map(|i| {
            let mut acc = weights[0] * v[i as usize];
            for (k, w) in weights.iter().enumerate().skip(1) {
                let k = k as i64;
                acc += w * (sample(i - k) + sample(i + k));
            }
            acc / total
        })
        .collect();
    Ok(CorrelationCurve {
        tau: curve.tau.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(t_max: f64, dt: f64, f: impl Fn(f64) -> f64) -> CorrelationCurve {
        let n = (t_max / dt).round() as i64;
        let tau: Vec<f64> = (-n..=n).map(|k| k as f64 * dt).collect();
        let values = tau.iter().map(|t| f(*t)).collect();
        CorrelationCurve::new(tau, values).unwrap()
    }

    #[test]
    fn kernel_has_unit_area_and_symmetry() {
        let r = DetectorResponse::new(0.7, 0.2, 0.9).unwrap();
        let dt = 0.001;
        let area: f64 = (-20_000..=20_000).map(|k| r.bin_weight(k, dt)).sum();
        assert!((area - 1.0).abs() < 1e-9, "{area}");
        for t in [0.0, 0.1, 1.3] {
            assert_eq!(r.density(t), r.density(-t));
        }
        let quad: f64 = (-20_000..=20_000)
            .map(|k| r.density(k as f64 * dt) * dt)
            .sum();
        assert!((quad - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_invalid_response() {
        assert!(DetectorResponse::new(1.5, 0.1, 0.1).is_err());
        assert!(DetectorResponse::new(0.5, 0.0, 0.1).is_err());
        assert!(DetectorResponse::fallback().validate().is_ok());
    }

    #[test]
    fn narrow_kernel_is_identity() {
        let c = uniform(5.0, 0.0025, |t| 1.0 - 0.8 * (-t * t).exp());
        let r = DetectorResponse::single_exponential(0.01).unwrap();
        let out = detector_convolve(&c, &r).unwrap();
        for (a, b) in out.values.iter().zip(&c.values) {
            assert!((a - b).abs() < 1e-3, "{a} {b}");
        }
    }

    #[test]
    fn fills_perfect_antibunching() {
        let c = uniform(10.0, 0.01, |t| 1.0 - (-t.abs() / 0.05).exp());
        assert_eq!(c.at_zero(), 0.0);
        let out = detector_convolve(&c, &DetectorResponse::fallback()).unwrap();
        assert!(out.at_zero() > 0.5, "{}", out.at_zero());
        assert!((out.values[0] - 1.0).abs() < 1e-3);
        assert!((out.values[out.len() - 1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn analytic_exponential_dip() {
        // exp(-|t|/a) convolved with exp(-|t|/b)/(2b) at t = 0 gives a/(a+b).
        let (a, b) = (0.3, 0.35);
        let c = uniform(15.0, 0.002, |t| 1.0 - (-t.abs() / a).exp());
        let out = detector_convolve(&c, &DetectorResponse::single_exponential(b).unwrap()).unwrap();
        assert!(
            (out.at_zero() - (1.0 - a / (a + b))).abs() < 1e-4,
            "{}",
            out.at_zero()
        );
    }

    #[test]
    fn coarse_grid_rejected() {
        let c = uniform(5.0, 0.1, |_| 1.0);
        let err = detector_convolve(&c, &DetectorResponse::single_exponential(0.35).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
        let irregular = CorrelationCurve::new(vec![0.0, 0.001, 0.003], vec![1.0; 3]).unwrap();
        assert!(detector_convolve(&irregular, &DetectorResponse::fallback()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn convolution_never_deepens_a_minimum_at_zero(
            depth in 0.0f64..1.0, width in 0.01f64..2.0, bump in 0.0f64..1.0, bump_w in 0.5f64..3.0,
            w in 0.0f64..1.0, t1 in 0.05f64..1.0, t2 in 0.05f64..1.0,
        ) {
            let c = uniform(8.0, 0.01, |t| {
                let dip = 1.0 - depth * (-t.abs() / width).exp();
                dip + bump * (1.0 - depth) * (t.abs() / bump_w) * (-t.abs() / bump_w).exp()
            });
            let out = detector_convolve(&c, &DetectorResponse::new(w, t1, t2).unwrap()).unwrap();
            prop_assert!(out.at_zero() >= c.at_zero() - 1e-12);
            prop_assert!(out.values.iter().all(|v| *v >= 0.0));
        }
    }
}
