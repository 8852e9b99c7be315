//! Driven quantum-dot / bimodal-cavity master equation.
//!
//! The Hilbert space is `{|g⟩, |X⟩, |Y⟩} ⊗ Fock(H) ⊗ Fock(V)`, each cavity
//! mode truncated at `n_fock` photon-number states. Density matrices are
//! vectorized column-major, which is nalgebra's native storage order, so
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

mod density;
mod evolve;
mod hamiltonian;
mod liouvillian;
mod params;
mod projector;
mod space;
mod sparse;
mod steady;
mod weak;

pub use density::DensityMatrix;
pub use evolve::{evolve, EvolveOptions};
pub use hamiltonian::build_hamiltonian;
pub use liouvillian::{build_liouvillian, CollapseOperator, Liouvillian};
pub use params::SystemParams;
pub use projector::{Detection, PolarizationProjector};
pub use space::HilbertSpace;
pub use sparse::SparseMatrix;
pub use steady::steady_state;
pub use weak::{dressed_resonances, weak_drive_response, WeakDriveResponse};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix used for operators and density matrices.
pub type CMatrix = DMatrix<Complex64>;

/// Convenience: build the Liouvillian for `params` on `space` and solve for
/// its steady state.
pub fn steady_state_for(
    params: &SystemParams,
    space: &HilbertSpace,
) -> crate::Result<DensityMatrix> {
    let h = build_hamiltonian(params, space)?;
    let l = build_liouvillian(params, space, &h)?;
    steady_state(&l)
}

/// Largest element modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
