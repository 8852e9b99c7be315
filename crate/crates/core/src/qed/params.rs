use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Physical parameters of the driven QD-cavity system.
///
/// Frequencies are in GHz on a common reference axis; rates in ns⁻¹; angles in
/// degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// QD-cavity coupling rate g.
    pub g: f64,
    /// Cavity intensity decay rate κ.
    pub kappa: f64,
    /// QD population relaxation rate γ∥.
    pub gamma_par: f64,
    /// QD pure dephasing rate γ*.
    pub gamma_star: f64,
    pub f_cav_h: f64,
    pub f_cav_v: f64,
    pub f_qd_x: f64,
    pub f_qd_y: f64,
    /// Angle between the X dipole and the H cavity axis.
    pub phi: f64,
    /// Coherent drive strength E.
    pub drive_amplitude: f64,
    pub f_laser: f64,
    /// Linear polarization angle of the drive, measured from H. Zero drives
    /// the H mode only.
    #[serde(default)]
    pub drive_angle: f64,
}

impl SystemParams {
    /// Parameter set extracted for the reference device (H drive on the Y
    /// transition, weak drive).
    pub fn reference_device() -> Self {
        Self {
            g: 14.0,
            kappa: 70.0,
            gamma_par: 1.0,
            gamma_star: 0.4,
            f_cav_h: 2.0,
            f_cav_v: 20.0,
            f_qd_x: -3.6,
            f_qd_y: 0.3,
            phi: 17.0,
            drive_amplitude: 0.1,
            f_laser: 0.3,
            drive_angle: 0.0,
        }
    }

    pub fn cavity_splitting(&self) -> f64 {
        self.f_cav_v - self.f_cav_h
    }

    pub fn qd_splitting(&self) -> f64 {
        self.f_qd_y - self.f_qd_x
    }

    pub fn with_laser(mut self, f_laser: f64) -> Self {
        self.f_laser = f_laser;
        self
    }

    pub fn with_drive(mut self, amplitude: f64) -> Self {
        self.drive_amplitude = amplitude;
        self
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    /// Rejects non-finite values and negative rates.
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma_par", self.gamma_par),
            ("gamma_star", self.gamma_star),
            ("f_cav_h", self.f_cav_h),
            ("f_cav_v", self.f_cav_v),
            ("f_qd_x", self.f_qd_x),
            ("f_qd_y", self.f_qd_y),
            ("phi", self.phi),
            ("drive_amplitude", self.drive_amplitude),
            ("f_laser", self.f_laser),
            ("drive_angle", self.drive_angle),
        ];
        for (name, v) in all {
            ensure(v.is_finite(), || format!("{name} must be finite, got {v}"))?;
        }
        for (name, v) in &all[..4] {
            ensure(*v >= 0.0, || format!("{name} must be >= 0, got {v}"))?;
        }
        ensure(self.drive_amplitude >= 0.0, || {
            format!("drive_amplitude must be >= 0, got {}", self.drive_amplitude)
        })
    }

    /// Unit Jones vector of the drive, `(cos θ, sin θ)` in the (H, V) basis.
    pub fn drive_polarization(&self) -> (f64, f64) {
        let t = self.drive_angle.to_radians();
        (t.cos(), t.sin())
    }
}
