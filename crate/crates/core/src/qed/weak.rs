use std::f64::consts::TAU;

use nalgebra::{Matrix4, SMatrix, SVector, Vector4};
use num_complex::Complex64;

use super::{Detection, SystemParams};
use crate::{Error, Result};

// Single-excitation basis: |X,0,0⟩, |Y,0,0⟩, |g,1,0⟩, |g,0,1⟩.
const H_SLOT: usize = 2;
const V_SLOT: usize = 3;

/// Leading-order steady state for `E → 0`.
///
/// Expanding `ρ = ρ₀ + Eρ₁ + E²ρ₂ + …` around the ground state, `ρ₁` lives in
/// the single-excitation/vacuum coherences and `ρ₂`'s single-excitation block
/// obeys a closed 16-dimensional equation. Every detected photon number is
/// `E² ⟨d|ρ₂|d⟩ + O(E⁴)`, so this gives the exact weak-drive limit of the
/// master equation without the truncated Fock space.
#[derive(Debug, Clone)]
pub struct WeakDriveResponse {
    /// `ψ₁` with `ρ₁ = ψ₁⟨G| + h.c.`
    pub coherence: Vector4<Complex64>,
    /// Single-excitation block of `ρ₂`.
    pub populations: Matrix4<Complex64>,
    pub kappa: f64,
}

fn effective_hamiltonian(p: &SystemParams) -> Matrix4<Complex64> {
    let det = |f: f64| TAU * (f - p.f_laser);
    let (s, c) = p.phi.to_radians().sin_cos();
    let qd_decay = 0.5 * (p.gamma_par + 2.0 * p.gamma_star);
    let mut h = Matrix4::<Complex64>::zeros();
    h[(0, 0)] = Complex64::new(det(p.f_qd_x), -qd_decay);
    h[(1, 1)] = Complex64::new(det(p.f_qd_y), -qd_decay);
    h[(2, 2)] = Complex64::new(det(p.f_cav_h), -0.5 * p.kappa);
    h[(3, 3)] = Complex64::new(det(p.f_cav_v), -0.5 * p.kappa);
    let couple = [
        (H_SLOT, 0, p.g * c),
        (H_SLOT, 1, p.g * s),
        (V_SLOT, 0, -p.g * s),
        (V_SLOT, 1, p.g * c),
    ];
    for (m, q, v) in couple {
        h[(m, q)] = Complex64::new(v, 0.0);
        h[(q, m)] = Complex64::new(v, 0.0);
    }
    h
}

/// Solves the weak-drive response for `params` (the drive amplitude itself
/// is not used; results are per unit `E²`).
pub fn weak_drive_response(params: &SystemParams) -> Result<WeakDriveResponse> {
    params.validate()?;
    let h_eff = effective_hamiltonian(params);
    let (e_h, e_v) = params.drive_polarization();
    let mut drive = Vector4::<Complex64>::zeros();
    drive[H_SLOT] = Complex64::new(e_h, 0.0);
    drive[V_SLOT] = Complex64::new(e_v, 0.0);

    let singular =
        || Error::SolverFailure("weak-drive response is singular (no dissipation)".into());
    let psi = h_eff.lu().solve(&(-drive)).ok_or_else(singular)?;

    let i = Complex64::new(0.0, 1.0);
    let source = (drive * psi.adjoint() - psi * drive.adjoint()) * i;

    // −i(H Y − Y H†) + 2γ* P Y P, vectorized column-major.
    let id = Matrix4::<Complex64>::identity();
    let mut proj = Matrix4::<Complex64>::zeros();
    proj[(0, 0)] = Complex64::new(1.0, 0.0);
    proj[(1, 1)] = Complex64::new(1.0, 0.0);
    let mut m: SMatrix<Complex64, 16, 16> =
        (id.kronecker(&h_eff) - h_eff.conjugate().kronecker(&id)) * (-i);
    m += proj.kronecker(&proj) * Complex64::new(2.0 * params.gamma_star, 0.0);
    let rhs = SVector::<Complex64, 16>::from_column_slice(source.as_slice());
    let y = m.lu().solve(&rhs).ok_or_else(singular)?;
    let populations = Matrix4::from_column_slice(y.as_slice());
    Ok(WeakDriveResponse {
        coherence: psi,
        populations,
        kappa: params.kappa,
    })
}

impl WeakDriveResponse {
    /// `lim_{E→0} ⟨n_det⟩ / E²`.
    pub fn detected_per_drive(&self, detection: &Detection) -> f64 {
        detection
            .mode_amplitudes()
            .iter()
            .map(|(ch, cv)| {
                let mut d = Vector4::<Complex64>::zeros();
                d[H_SLOT] = ch.conj();
                d[V_SLOT] = cv.conj();
                (d.adjoint() * self.populations * d)[(0, 0)].re
            })
            .sum()
    }

    /// Transmission normalized to the on-resonance empty-cavity H peak,
    /// `E²/(κ/2)²`.
    pub fn transmission(&self, detection: &Detection) -> f64 {
        self.detected_per_drive(detection) * 0.25 * self.kappa * self.kappa
    }
}

/// Frequencies (GHz) and linewidths (FWHM, GHz) of the four single-excitation
/// eigenmodes: the cavity-dressed X, Y, H and V resonances.
pub fn dressed_resonances(params: &SystemParams) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    let h = effective_hamiltonian(&params.with_laser(0.0));
    let eig = h.schur().eigenvalues().ok_or_else(|| {
        Error::SolverFailure("eigenvalues of the effective Hamiltonian did not converge".into())
    })?;
    let mut out: Vec<(f64, f64)> = eig
        .iter()
        .map(|z| (z.re / TAU, -2.0 * z.im / TAU))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}
