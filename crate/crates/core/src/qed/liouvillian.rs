use num_complex::Complex64;

use super::{CMatrix, HilbertSpace, SparseMatrix, SystemParams};
use crate::{Error, Result};

/// A Lindblad jump operator `c` entering as `rate · D[c]`.
#[derive(Debug, Clone)]
pub struct CollapseOperator {
    pub label: &'static str,
    pub rate: f64,
    pub op: CMatrix,
}

/// Superoperator `L` of the master equation `dρ/dt = L[ρ]`, acting on
/// column-major vectorized density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: HilbertSpace,
    matrix: CMatrix,
    sparse: SparseMatrix,
    collapse: Vec<CollapseOperator>,
}

/// `L[ρ] = −i[H,ρ] + κ D[a_H]ρ + κ D[a_V]ρ + γ∥ D[σ_X]ρ + γ∥ D[σ_Y]ρ + 2γ* D[P_e]ρ`
/// with `D[c]ρ = cρc† − ½{c†c, ρ}`.
///
/// Pure dephasing acts with rate 2γ* on the excited-manifold projector, so
/// the QD optical coherence decays at `γ∥/2 + γ*`.
pub fn build_liouvillian(
    params: &SystemParams,
    space: &HilbertSpace,
    hamiltonian: &CMatrix,
) -> Result<Liouvillian> {
    params.validate()?;
    let collapse = vec![
        CollapseOperator {
            label: "cavity_h",
            rate: params.kappa,
            op: space.a_h(),
        },
        CollapseOperator {
            label: "cavity_v",
            rate: params.kappa,
            op: space.a_v(),
        },
        CollapseOperator {
            label: "qd_x",
            rate: params.gamma_par,
            op: space.sigma_x(),
        },
        CollapseOperator {
            label: "qd_y",
            rate: params.gamma_par,
            op: space.sigma_y(),
        },
        CollapseOperator {
            label: "dephasing",
            rate: 2.0 * params.gamma_star,
            op: space.excited_projector(),
        },
    ];
    Liouvillian::from_parts(*space, hamiltonian, collapse)
}

impl Liouvillian {
    /// Assembles `−i(I⊗H − Hᵀ⊗I) + Σ rate (c̄⊗c − ½ I⊗c†c − ½ (c†c)ᵀ⊗I)`.
    pub fn from_parts(
        space: HilbertSpace,
        hamiltonian: &CMatrix,
        collapse: Vec<CollapseOperator>,
    ) -> Result<Self> {
        let d = space.dim();
        if hamiltonian.nrows() != d || hamiltonian.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: hamiltonian.nrows(),
            });
        }
        for c in &collapse {
            if c.op.nrows() != d || c.op.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.op.nrows(),
                });
            }
            if !(c.rate.is_finite() && c.rate >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "collapse rate {} for {}",
                    c.rate, c.label
                )));
            }
        }
        let id = CMatrix::identity(d, d);
        let mi = Complex64::new(0.0, -1.0);
        let mut matrix = (id.kronecker(hamiltonian) - hamiltonian.transpose().kronecker(&id)) * mi;
        for c in collapse.iter().filter(|c| c.rate > 0.0) {
            let cdc = c.op.adjoint() * &c.op;
            let r = Complex64::new(c.rate, 0.0);
            let half = Complex64::new(0.5 * c.rate, 0.0);
            matrix += c.op.conjugate().kronecker(&c.op) * r;
            matrix -= id.kronecker(&cdc) * half;
            matrix -= cdc.transpose().kronecker(&id) * half;
        }
        let sparse = SparseMatrix::from_dense(&matrix);
        Ok(Self {
            space,
            matrix,
            sparse,
            collapse,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    /// Dense `D² × D²` superoperator matrix.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn sparse(&self) -> &SparseMatrix {
        &self.sparse
    }

    pub fn collapse_operators(&self) -> &[CollapseOperator] {
        &self.collapse
    }

    /// Evaluates `L[ρ]` for a `D × D` matrix.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.space.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho.nrows(),
            });
        }
        let mut out = CMatrix::zeros(d, d);
        self.sparse.mul_into(rho.as_slice(), out.as_mut_slice());
        Ok(out)
    }
}
