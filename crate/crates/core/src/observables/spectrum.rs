use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::device::StarkMap;
use crate::qed::{steady_state_for, weak_drive_response, Detection, HilbertSpace, SystemParams};
use crate::{Error, Result};

/// Transmission sampled against laser frequency.
///
/// Values are normalized so that the empty cavity (g = 0), H-driven and
/// H-detected, peaks at 1 on resonance: the detected photon number is divided
/// by `E²/(κ/2)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    /// Gate voltage for slices of a voltage map.
    pub voltage: Option<f64>,
    pub detection: Detection,
    pub params: SystemParams,
}

impl Spectrum {
    /// Grid point with the smallest value inside `[lo, hi]`.
    pub fn min_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.extremum_in(lo, hi, |a, b| a < b)
    }

    pub fn max_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.extremum_in(lo, hi, |a, b| a > b)
    }

    fn extremum_in(
        &self,
        lo: f64,
        hi: f64,
        better: impl Fn(f64, f64) -> bool,
    ) -> Option<(f64, f64)> {
        self.freqs
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .fold(None, |best: Option<(f64, f64)>, (&f, &v)| match best {
                Some((_, bv)) if !better(v, bv) => best,
                _ => Some((f, v)),
            })
    }

    /// Interior local minima `(f, value)`.
    pub fn local_minima(&self) -> Vec<(f64, f64)> {
        self.local(|a, b| a < b)
    }

    pub fn local_maxima(&self) -> Vec<(f64, f64)> {
        self.local(|a, b| a > b)
    }

    fn local(&self, better: impl Fn(f64, f64) -> bool) -> Vec<(f64, f64)> {
        self.values
            .windows(3)
            .enumerate()
            .filter(|(_, w)| better(w[1], w[0]) && better(w[1], w[2]))
            .map(|(i, w)| (self.freqs[i + 1], w[1]))
            .collect()
    }
}

/// How a spectrum point is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumModel {
    /// Full steady state of the truncated master equation at the configured
    /// drive amplitude.
    MasterEquation(HilbertSpace),
    /// Exact `E → 0` limit (drive-independent after normalization).
    WeakDrive,
}

impl SpectrumModel {
    pub fn spectrum(
        &self,
        params: &SystemParams,
        detection: &Detection,
        f_grid: &[f64],
    ) -> Result<Spectrum> {
        match self {
            SpectrumModel::MasterEquation(space) => {
                transmission_spectrum(params, space, detection, f_grid)
            }
            SpectrumModel::WeakDrive => weak_drive_spectrum(params, detection, f_grid),
        }
    }
}

fn check_normalizable(params: &SystemParams, needs_drive: bool) -> Result<()> {
    params.validate()?;
    if !(params.kappa > 0.0) {
        return Err(Error::InvalidParameter(
            "transmission normalization needs kappa > 0".into(),
        ));
    }
    if needs_drive && !(params.drive_amplitude > 0.0) {
        return Err(Error::InvalidParameter(
            "transmission normalization needs drive_amplitude > 0".into(),
        ));
    }
    Ok(())
}

/// Steady-state transmission for each laser frequency in `f_grid`.
pub fn transmission_spectrum(
    params: &SystemParams,
    space: &HilbertSpace,
    detection: &Detection,
    f_grid: &[f64],
) -> Result<Spectrum> {
    check_normalizable(params, true)?;
    let space = *space;
    let n_det = detection.number_operator(&space);
    let norm = params.drive_amplitude.powi(2) / (0.25 * params.kappa * params.kappa);
    let values = f_grid
        .iter()
        .map(|&f| {
            let rho = steady_state_for(&params.with_laser(f), &space).map_err(|e| {
                Error::AtFrequency {
                    f_ghz: f,
                    source: Box::new(e),
                }
            })?;
            Ok(rho.expectation(&n_det).re.max(0.0) / norm)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Spectrum {
        freqs: f_grid.to_vec(),
        values,
        voltage: None,
        detection: *detection,
        params: *params,
    })
}

/// Weak-drive limit of [`transmission_spectrum`].
pub fn weak_drive_spectrum(
    params: &SystemParams,
    detection: &Detection,
    f_grid: &[f64],
) -> Result<Spectrum> {
    check_normalizable(params, false)?;
    let values = f_grid
        .iter()
        .map(|&f| {
            weak_drive_response(&params.with_laser(f))
                .map(|r| r.transmission(detection).max(0.0))
                .map_err(|e| Error::AtFrequency {
                    f_ghz: f,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Spectrum {
        freqs: f_grid.to_vec(),
        values,
        voltage: None,
        detection: *detection,
        params: *params,
    })
}

/// Closed-form transmission of the bare bimodal cavity (QD ignored).
///
/// Each mode responds with the coherent amplitude `α_m ∝ e_m / (κ/2 + iΔ_m)`
/// for drive polarization `e`; projected detection adds the amplitudes,
/// unpolarized detection adds the intensities. With an H drive and H detection
/// this is a unit-height Lorentzian of FWHM κ/2π GHz at `f_cav_h`.
pub fn empty_cavity_spectrum(
    params: &SystemParams,
    detection: &Detection,
    f_grid: &[f64],
) -> Spectrum {
    let (e_h, e_v) = params.drive_polarization();
    let half = 0.5 * params.kappa;
    let amp = |f_mode: f64, f: f64, e: f64| {
        Complex64::new(0.0, -e * half) / Complex64::new(half, TAU * (f_mode - f))
    };
    let channels = detection.mode_amplitudes();
    let values = f_grid
        .iter()
        .map(|&f| {
            let (a_h, a_v) = (amp(params.f_cav_h, f, e_h), amp(params.f_cav_v, f, e_v));
            channels
                .iter()
                .map(|(ch, cv)| (ch * a_h + cv * a_v).norm_sqr())
                .sum()
        })
        .collect();
    Spectrum {
        freqs: f_grid.to_vec(),
        values,
        voltage: None,
        detection: *detection,
        params: *params,
    }
}

/// Transmission against laser frequency and gate voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageMap {
    pub slices: Vec<Spectrum>,
}

impl VoltageMap {
    pub fn voltages(&self) -> Vec<f64> {
        self.slices.iter().filter_map(|s| s.voltage).collect()
    }
}

/// Scans the QD transitions with gate voltage through the linear Stark maps
/// and computes one spectrum per voltage.
pub fn voltage_map(
    params: &SystemParams,
    model: SpectrumModel,
    detection: &Detection,
    f_grid: &[f64],
    voltages: &[f64],
    stark_x: &StarkMap,
    stark_y: &StarkMap,
) -> Result<VoltageMap> {
    let slices = voltages
        .iter()
        .map(|&v| {
            let p = SystemParams {
                f_qd_x: stark_x.frequency(v),
                f_qd_y: stark_y.frequency(v),
                ..*params
            };
            let mut s = model.spectrum(&p, detection, f_grid)?;
            s.voltage = Some(v);
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VoltageMap { slices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qed::PolarizationProjector;
    use std::f64::consts::PI;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn empty_cavity_peak_and_half_width() {
        let p = SystemParams::reference_device();
        let hw = p.kappa / (4.0 * PI);
        let s = empty_cavity_spectrum(
            &p,
            &Detection::h(),
            &[p.f_cav_h, p.f_cav_h - hw, p.f_cav_h + hw],
        );
        assert!((s.values[0] - 1.0).abs() < 1e-14);
        assert!((s.values[1] - 0.5).abs() < 1e-14);
        assert!((s.values[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn v_projection_peaks_at_v_mode() {
        let p = SystemParams {
            drive_angle: 45.0,
            ..SystemParams::reference_device()
        };
        let s = empty_cavity_spectrum(&p, &Detection::v(), &grid(-20.0, 40.0, 601));
        let (f, _) = s.max_in(-20.0, 40.0).unwrap();
        assert!((f - 20.0).abs() < 1e-9);
        // Two Lorentzians without polarization selection.
        let both = empty_cavity_spectrum(&p, &Detection::Unpolarized, &grid(-20.0, 40.0, 601));
        let peaks: Vec<f64> = both.local_maxima().iter().map(|m| m.0).collect();
        assert_eq!(peaks.len(), 2);
    }

    #[test]
    fn weak_drive_matches_closed_form_without_qd() {
        let p = SystemParams {
            g: 0.0,
            drive_angle: 30.0,
            ..SystemParams::reference_device()
        };
        let f = grid(-20.0, 40.0, 121);
        for det in [
            Detection::h(),
            Detection::v(),
            Detection::Unpolarized,
            Detection::Projected(PolarizationProjector::new(1.0, 0.4)),
        ] {
            let a = weak_drive_spectrum(&p, &det, &f).unwrap();
            let b = empty_cavity_spectrum(&p, &det, &f);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-12 * y.max(1e-3), "{det:?}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn spectrum_normalization_is_drive_independent() {
        let s = HilbertSpace::default();
        let f = grid(-6.0, 4.0, 11);
        let p = SystemParams::reference_device();
        let a =
            transmission_spectrum(&p.with_drive(0.02), &s, &Detection::Unpolarized, &f).unwrap();
        let b =
            transmission_spectrum(&p.with_drive(0.01), &s, &Detection::Unpolarized, &f).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-4 * y);
        }
    }

    #[test]
    fn zero_drive_cannot_be_normalized() {
        let p = SystemParams::reference_device().with_drive(0.0);
        assert!(
            transmission_spectrum(&p, &HilbertSpace::default(), &Detection::h(), &[0.0]).is_err()
        );
    }

    #[test]
    fn solver_errors_name_the_grid_point() {
        let p = SystemParams {
            kappa: 1e-300,
            gamma_par: 0.0,
            gamma_star: 0.0,
            ..SystemParams::reference_device()
        };
        let err =
            transmission_spectrum(&p, &HilbertSpace::new(2).unwrap(), &Detection::h(), &[1.5])
                .unwrap_err();
        assert!(
            matches!(err, Error::AtFrequency { f_ghz, .. } if f_ghz == 1.5),
            "{err}"
        );
    }

    #[test]
    fn voltage_map_slices_equal_direct_spectra() {
        let p = SystemParams::reference_device();
        let sx = StarkMap::new(0.935, -3.6, 20.0);
        let sy = StarkMap::new(0.935, 0.3, 20.0);
        let f = grid(-8.0, 6.0, 57);
        let volts = [0.9, 0.935, 0.97];
        let map = voltage_map(
            &p,
            SpectrumModel::WeakDrive,
            &Detection::Unpolarized,
            &f,
            &volts,
            &sx,
            &sy,
        )
        .unwrap();
        assert_eq!(map.voltages(), volts.to_vec());
        for (v, slice) in volts.iter().zip(&map.slices) {
            let q = SystemParams {
                f_qd_x: sx.frequency(*v),
                f_qd_y: sy.frequency(*v),
                ..p
            };
            let direct = weak_drive_spectrum(&q, &Detection::Unpolarized, &f).unwrap();
            assert_eq!(direct.values, slice.values);
        }
    }
}
