use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{CMatrix, HilbertSpace, SystemParams};
use crate::Result;

/// Hamiltonian in the frame rotating at the laser frequency, in rad/ns.
///
/// ```text
/// H = Σ_m Δ_m a_m†a_m + Σ_i Δ_i σ_i†σ_i
///   + g[cos φ (a_H†σ_X + h.c.) + sin φ (a_H†σ_Y + h.c.)
///       − sin φ (a_V†σ_X + h.c.) + cos φ (a_V†σ_Y + h.c.)]
///   + E[cos θ (a_H† + a_H) + sin θ (a_V† + a_V)]
/// ```
///
/// with `Δ = 2π (f − f_laser)` and θ the drive polarization angle.
pub fn build_hamiltonian(params: &SystemParams, space: &HilbertSpace) -> Result<CMatrix> {
    params.validate()?;
    let (ah, av) = (space.a_h(), space.a_v());
    let (sx, sy) = (space.sigma_x(), space.sigma_y());
    let det = |f: f64| Complex64::new(TAU * (f - params.f_laser), 0.0);
    let re = |x: f64| Complex64::new(x, 0.0);

    let num = |c: &CMatrix| c.adjoint() * c;
    // a†σ + σ†a
    let exchange = |a: &CMatrix, s: &CMatrix| a.adjoint() * s + s.adjoint() * a;

    let (sin_phi, cos_phi) = params.phi.to_radians().sin_cos();
    let (e_h, e_v) = params.drive_polarization();
    let g = params.g;
    let e = params.drive_amplitude;

    let h = num(&ah) * det(params.f_cav_h)
        + num(&av) * det(params.f_cav_v)
        + num(&sx) * det(params.f_qd_x)
        + num(&sy) * det(params.f_qd_y)
        + exchange(&ah, &sx) * re(g * cos_phi)
        + exchange(&ah, &sy) * re(g * sin_phi)
        + exchange(&av, &sx) * re(-g * sin_phi)
        + exchange(&av, &sy) * re(g * cos_phi)
        + (&ah + ah.adjoint()) * re(e * e_h)
        + (&av + av.adjoint()) * re(e * e_v);
    Ok(h)
}
