//! TOML run configuration.
//!
//! ```toml
//! [system]      # GHz for frequencies, ns⁻¹ for rates, degrees for phi
//! g = 14.0
//! kappa = 70.0
//! gamma_par = 1.0
//! gamma_star = 0.4
//! f_cav_h = 2.0
//! f_cav_v = 20.0
//! f_qd_x = -3.6
//! f_qd_y = 0.3
//! phi = 17.0
//!
//! [space]
//! n_fock = 3
//!
//! [drive]       # either amplitude, or power_nw together with calibration
//! amplitude = 0.1
//! f_laser = 0.3
//! angle = 0.0
//! ```
//!
//! `[detector]`, `[splitters]`, `[scan]` and `[saturation]` are optional.

use std::path::Path;

use cavsps_core::device::StarkMap;
use cavsps_core::hom::{PulseTrain, SplitterParams};
use cavsps_core::observables::{DetectorResponse, SaturationModel};
use cavsps_core::qed::{HilbertSpace, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub space: SpaceSection,
    pub drive: DriveSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorSection>,
    #[serde(default)]
    pub splitters: SplitterSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub g: f64,
    pub kappa: f64,
    pub gamma_par: f64,
    pub gamma_star: f64,
    pub f_cav_h: f64,
    pub f_cav_v: f64,
    pub f_qd_x: f64,
    pub f_qd_y: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub n_fock: usize,
}

impl Default for SpaceSection {
    fn default() -> Self {
        Self { n_fock: 3 }
    }
}

/// Drive field. `calibration` converts incident power to field strength:
/// E = calibration · √power_nw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_nw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<f64>,
    pub f_laser: f64,
    #[serde(default)]
    pub angle: f64,
}

impl DriveSection {
    pub fn amplitude(&self) -> Result<f64> {
        match (self.amplitude, self.power_nw, self.calibration) {
            (Some(e), None, _) => Ok(e),
            (None, Some(p), Some(c)) => {
                if p < 0.0 || c < 0.0 {
                    return Err(CliError::Config(
                        "drive power and calibration must be non-negative".into(),
                    ));
                }
                Ok(c * p.sqrt())
            }
            (None, Some(_), None) => Err(CliError::Config(
                "drive.power_nw needs drive.calibration".into(),
            )),
            (Some(_), Some(_), _) => Err(CliError::Config(
                "give drive.amplitude or drive.power_nw, not both".into(),
            )),
            (None, None, _) => Err(CliError::Config("drive needs amplitude or power_nw".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub weight: f64,
    pub tau1_ns: f64,
    pub tau2_ns: f64,
}

impl DetectorSection {
    pub fn response(&self) -> Result<DetectorResponse> {
        Ok(DetectorResponse::new(
            self.weight,
            self.tau1_ns,
            self.tau2_ns,
        )?)
    }

    pub fn from_response(r: &DetectorResponse) -> Self {
        Self {
            weight: r.weight,
            tau1_ns: r.tau1,
            tau2_ns: r.tau2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitterSection {
    pub r: f64,
    pub t: f64,
    pub visibility: f64,
    pub pulse_times_ns: Vec<f64>,
    pub period_ns: f64,
    pub mz_delay_ns: f64,
}

impl Default for SplitterSection {
    fn default() -> Self {
        let s = SplitterParams::reference();
        let train = PulseTrain::reference();
        Self {
            r: s.r,
            t: s.t,
            visibility: s.visibility,
            pulse_times_ns: train.times().to_vec(),
            period_ns: train.period(),
            mz_delay_ns: 5.2,
        }
    }
}

impl SplitterSection {
    pub fn splitter(&self) -> Result<SplitterParams> {
        Ok(SplitterParams::new(self.r, self.t, self.visibility)?)
    }

    pub fn train(&self) -> Result<PulseTrain> {
        Ok(PulseTrain::new(
            self.pulse_times_ns.clone(),
            self.period_ns,
        )?)
    }
}

/// Frequency (GHz), delay (ns) and optional gate-voltage (V) grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub f_start: f64,
    pub f_stop: f64,
    pub f_points: usize,
    pub tau_max: f64,
    pub tau_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voltage: Option<VoltageScan>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            f_start: -10.0,
            f_stop: 8.0,
            f_points: 181,
            tau_max: 10.0,
            tau_step: 0.01,
            voltage: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageScan {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Gate voltage at which the [system] QD frequencies apply.
    pub reference_v: f64,
    /// Stark tuning, GHz/V, shared by both transitions.
    pub slope: f64,
}

impl VoltageScan {
    pub fn voltages(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationSection {
    pub r_max: f64,
    pub p_sat_nw: f64,
    pub c_leak: f64,
    pub g2_single: f64,
}

impl SaturationSection {
    pub fn model(&self) -> Result<SaturationModel> {
        Ok(SaturationModel::new(
            self.r_max,
            self.p_sat_nw,
            self.c_leak,
        )?)
    }
}

impl ScanSection {
    pub fn frequencies(&self) -> Vec<f64> {
        linspace(self.f_start, self.f_stop, self.f_points)
    }

    pub fn delays(&self) -> Vec<f64> {
        let n = (self.tau_max / self.tau_step).round() as usize;
        (0..=n).map(|k| k as f64 * self.tau_step).collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.f_start.is_finite()
            && self.f_stop.is_finite()
            && self.f_stop > self.f_start
            && self.f_points >= 2
            && self.tau_max > 0.0
            && self.tau_step > 0.0
            && self.tau_step <= self.tau_max;
        if !ok {
            return Err(CliError::Config(
                "scan grid must be increasing with at least two points".into(),
            ));
        }
        if let Some(v) = self.voltage {
            if !(v.stop > v.start
                && v.points >= 2
                && v.slope.is_finite()
                && v.reference_v.is_finite())
            {
                return Err(CliError::Config(
                    "scan.voltage grid must be increasing with at least two points".into(),
                ));
            }
        }
        Ok(())
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_params(&SystemParams::reference_device())
    }
}

impl RunConfig {
    pub fn from_params(p: &SystemParams) -> Self {
        Self {
            system: SystemSection {
                g: p.g,
                kappa: p.kappa,
                gamma_par: p.gamma_par,
                gamma_star: p.gamma_star,
                f_cav_h: p.f_cav_h,
                f_cav_v: p.f_cav_v,
                f_qd_x: p.f_qd_x,
                f_qd_y: p.f_qd_y,
                phi: p.phi,
            },
            space: SpaceSection::default(),
            drive: DriveSection {
                amplitude: Some(p.drive_amplitude),
                power_nw: None,
                calibration: None,
                f_laser: p.f_laser,
                angle: p.drive_angle,
            },
            detector: None,
            splitters: SplitterSection::default(),
            scan: ScanSection::default(),
            saturation: None,
        }
    }

    /// Copies the QD and cavity fields of `p` into `[system]`; drive settings
    /// are kept.
    pub fn set_system(&mut self, p: &SystemParams) {
        self.system = Self::from_params(p).system;
    }

    pub fn params(&self) -> Result<SystemParams> {
        let s = &self.system;
        let p = SystemParams {
            g: s.g,
            kappa: s.kappa,
            gamma_par: s.gamma_par,
            gamma_star: s.gamma_star,
            f_cav_h: s.f_cav_h,
            f_cav_v: s.f_cav_v,
            f_qd_x: s.f_qd_x,
            f_qd_y: s.f_qd_y,
            phi: s.phi,
            drive_amplitude: self.drive.amplitude()?,
            f_laser: self.drive.f_laser,
            drive_angle: self.drive.angle,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        Ok(HilbertSpace::new(self.space.n_fock)?)
    }

    pub fn stark_maps(&self) -> Option<(StarkMap, StarkMap)> {
        self.scan.voltage.map(|v| {
            (
                StarkMap::new(v.reference_v, self.system.f_qd_x, v.slope),
                StarkMap::new(v.reference_v, self.system.f_qd_y, v.slope),
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.space()?;
        self.splitters.splitter()?;
        self.splitters.train()?;
        if !(self.splitters.mz_delay_ns.is_finite() && self.splitters.mz_delay_ns >= 0.0) {
            return Err(CliError::Config(
                "splitters.mz_delay_ns must be non-negative".into(),
            ));
        }
        if let Some(d) = &self.detector {
            d.response()?;
        }
        if let Some(s) = &self.saturation {
            s.model()?;
        }
        self.scan.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(c.params().unwrap(), SystemParams::reference_device());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = RunConfig::default().to_toml();
        text = text.replace("[space]", "[space]\nn_fok = 4");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
        let extra = format!("{}\n[extra]\nx = 1\n", RunConfig::default().to_toml());
        assert!(RunConfig::parse(&extra).is_err());
    }

    #[test]
    fn physical_ranges_enforced() {
        let mut c = RunConfig::default();
        c.system.kappa = -1.0;
        assert!(RunConfig::parse(&c.to_toml()).is_err());
        let mut c = RunConfig::default();
        c.splitters.r = 0.7;
        assert!(RunConfig::parse(&c.to_toml()).is_err());
        let mut c = RunConfig::default();
        c.space.n_fock = 0;
        assert!(RunConfig::parse(&c.to_toml()).is_err());
    }

    #[test]
    fn power_calibration() {
        let mut c = RunConfig::default();
        c.drive.amplitude = None;
        c.drive.power_nw = Some(4.0);
        assert!(c.params().is_err());
        c.drive.calibration = Some(0.05);
        assert!((c.params().unwrap().drive_amplitude - 0.1).abs() < 1e-15);
        c.drive.amplitude = Some(0.1);
        assert!(c.params().is_err());
    }

    #[test]
    fn set_system_keeps_other_sections() {
        let mut c = RunConfig::default();
        c.detector = Some(DetectorSection {
            weight: 1.0,
            tau1_ns: 0.3,
            tau2_ns: 0.3,
        });
        c.space.n_fock = 4;
        c.drive.f_laser = -3.6;
        let p = SystemParams {
            kappa: 65.0,
            ..SystemParams::reference_device()
        };
        c.set_system(&p);
        assert_eq!(c.system.kappa, 65.0);
        assert_eq!(c.space.n_fock, 4);
        assert_eq!(c.drive.f_laser, -3.6);
        assert!(c.detector.is_some());
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            (
                0.0f64..50.0,
                1.0f64..200.0,
                0.01f64..10.0,
                0.0f64..5.0,
                -50.0f64..50.0,
                -50.0f64..50.0,
            ),
            (-50.0f64..50.0, -50.0f64..50.0, -90.0f64..90.0, 2usize..6),
            (prop::option::of(0.0f64..10.0), -50.0f64..50.0, 0.0f64..90.0),
            (
                prop::option::of((0.0f64..1.0, 0.01f64..2.0, 0.01f64..2.0)),
                0.01f64..0.99,
                0.0f64..1.0,
            ),
            prop::option::of((-1.0f64..0.0, 0.1f64..2.0, -5.0f64..5.0)),
        )
            .prop_map(|(a, b, d, s, v)| {
                let mut c = RunConfig::default();
                c.system = SystemSection {
                    g: a.0,
                    kappa: a.1,
                    gamma_par: a.2,
                    gamma_star: a.3,
                    f_cav_h: a.4,
                    f_cav_v: a.5,
                    f_qd_x: b.0,
                    f_qd_y: b.1,
                    phi: b.2,
                };
                c.space.n_fock = b.3;
                match d.0 {
                    Some(e) => c.drive.amplitude = Some(e),
                    None => {
                        c.drive.amplitude = None;
                        c.drive.power_nw = Some(d.2 / 10.0);
                        c.drive.calibration = Some(0.07);
                    }
                }
                c.drive.f_laser = d.1;
                c.drive.angle = d.2;
                c.detector = s.0.map(|(w, t1, t2)| DetectorSection {
                    weight: w,
                    tau1_ns: t1,
                    tau2_ns: t2,
                });
                c.splitters.r = s.1;
                c.splitters.t = 1.0 - s.1;
                c.splitters.visibility = s.2;
                c.scan.voltage = v.map(|(lo, span, slope)| VoltageScan {
                    start: lo,
                    stop: lo + span,
                    points: 11,
                    reference_v: 0.935,
                    slope,
                });
                c
            })
    }

    proptest! {
        #[test]
        fn parse_serialize_parse_is_identity(c in arb_config()) {
            let once = RunConfig::parse(&c.to_toml()).unwrap();
            prop_assert_eq!(&once, &c);
            let twice = RunConfig::parse(&once.to_toml()).unwrap();
            prop_assert_eq!(twice, once);
        }
    }
}
