use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::stages::{SaturationData, SpectrumData};
use crate::device::StarkMap;
use crate::observables::{
    count_rate_model, g2_mixture, CorrelationCurve, DetectorResponse, SaturationModel,
    SpectrumModel,
};
use crate::qed::{Detection, SystemParams};
use crate::Result;

fn noisy(values: impl Iterator<Item = f64>, rel: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    values
        .map(|v| (v * (1.0 + rel * normal.sample(rng))).max(0.0))
        .collect()
}

/// Model spectrum with multiplicative Gaussian noise of relative size
/// `rel_noise`.
pub fn synthetic_spectrum(
    params: &SystemParams,
    model: SpectrumModel,
    detection: &Detection,
    f_grid: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<SpectrumData> {
    let s = model.spectrum(params, detection, f_grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = noisy(s.values.into_iter(), rel_noise, &mut rng);
    SpectrumData::new(f_grid.to_vec(), values, *detection, params.drive_angle)
}

/// One noisy spectrum per gate voltage with the QD lines placed by the
/// Stark maps.
pub fn synthetic_voltage_map(
    params: &SystemParams,
    model: SpectrumModel,
    detection: &Detection,
    f_grid: &[f64],
    voltages: &[f64],
    maps: (&StarkMap, &StarkMap),
    rel_noise: f64,
    seed: u64,
) -> Result<Vec<(f64, SpectrumData)>> {
    voltages
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let p = SystemParams {
                f_qd_x: maps.0.frequency(v),
                f_qd_y: maps.1.frequency(v),
                ..*params
            };
            let seed = seed.wrapping_add(k as u64);
            Ok((
                v,
                synthetic_spectrum(&p, model, detection, f_grid, rel_noise, seed)?,
            ))
        })
        .collect()
}

/// Count rates and `g²(0)` against power. `g2_single` is the emitter's
/// zero-delay value as seen by the detectors; `g2_noise` is absolute.
pub fn synthetic_saturation(
    model: &SaturationModel,
    g2_single: f64,
    powers: &[f64],
    rel_noise: f64,
    g2_noise: f64,
    seed: u64,
) -> Result<SaturationData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates = noisy(
        powers.iter().map(|p| count_rate_model(*p, model)),
        rel_noise,
        &mut rng,
    );
    let normal = Normal::new(0.0, g2_noise.max(0.0)).expect("non-negative sigma");
    let g2 = powers
        .iter()
        .map(|&p| {
            let clean = g2_mixture(model.single_photon_rate(p), model.leak_rate(p), g2_single)?;
            Ok((clean + normal.sample(&mut rng)).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    SaturationData::new(powers.to_vec(), rates, Some(g2))
}

/// Detector calibration histogram `area · r(τ)` with multiplicative noise.
pub fn synthetic_detector_curve(
    response: &DetectorResponse,
    area: f64,
    tau: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<CorrelationCurve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = noisy(
        tau.iter().map(|t| area * response.density(*t)),
        rel_noise,
        &mut rng,
    );
    CorrelationCurve::new(tau.to_vec(), values)
}
