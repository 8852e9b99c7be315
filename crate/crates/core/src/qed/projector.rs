use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CMatrix, HilbertSpace};

/// Linear/elliptical polarization analyzer in front of the detector.
///
/// The Jones vector is `(cos θ, e^{iδ} sin θ)` in the (H, V) basis, giving
/// the detection operator `a_det = cos θ a_H + e^{iδ} sin θ a_V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationProjector {
    /// Detection angle θ in radians.
    pub theta: f64,
    /// Relative phase δ in radians.
    pub delta: f64,
}

impl PolarizationProjector {
    pub fn new(theta: f64, delta: f64) -> Self {
        Self { theta, delta }
    }

    pub fn h() -> Self {
        Self::new(0.0, 0.0)
    }

    /// Crossed with respect to an H drive.
    pub fn v() -> Self {
        Self::new(std::f64::consts::FRAC_PI_2, 0.0)
    }

    pub fn from_degrees(theta_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), 0.0)
    }

    /// Coefficients `(c_H, c_V)` of `a_det = c_H a_H + c_V a_V`.
    pub fn coefficients(&self) -> (Complex64, Complex64) {
        (
            Complex64::new(self.theta.cos(), 0.0),
            Complex64::from_polar(self.theta.sin(), self.delta),
        )
    }

    pub fn detection_operator(&self, space: &HilbertSpace) -> CMatrix {
        let (ch, cv) = self.coefficients();
        space.a_h() * ch + space.a_v() * cv
    }
}

/// What the detector sees: one projected field, or both cavity modes summed
/// incoherently (no polarization selection).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Detection {
    Projected(PolarizationProjector),
    Unpolarized,
}

impl Detection {
    pub fn h() -> Self {
        Detection::Projected(PolarizationProjector::h())
    }

    pub fn v() -> Self {
        Detection::Projected(PolarizationProjector::v())
    }

    /// Field operators whose number operators are summed at the detector.
    pub fn operators(&self, space: &HilbertSpace) -> Vec<CMatrix> {
        match self {
            Detection::Projected(p) => vec![p.detection_operator(space)],
            Detection::Unpolarized => vec![space.a_h(), space.a_v()],
        }
    }

    /// Detected photon-number operator `Σ_c c†c`.
    pub fn number_operator(&self, space: &HilbertSpace) -> CMatrix {
        let d = space.dim();
        self.operators(space)
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, c| acc + c.adjoint() * c)
    }

    /// Intensity weights `(w_H, w_V)` and the cross amplitude used by the
    /// closed-form empty-cavity spectrum.
    pub(crate) fn mode_amplitudes(&self) -> Vec<(Complex64, Complex64)> {
        match self {
            Detection::Projected(p) => vec![p.coefficients()],
            Detection::Unpolarized => vec![
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
                (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
            ],
        }
    }
}
