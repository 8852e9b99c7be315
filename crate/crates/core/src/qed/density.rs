use num_complex::Complex64;

use super::{max_abs, CMatrix, HilbertSpace};
use crate::{Error, Result};

/// Quantum state on a [`HilbertSpace`].
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
    space: HilbertSpace,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian, unit trace and positive to `1e-9`.
    pub fn new(matrix: CMatrix, space: HilbertSpace) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix, space);
        rho.check(1e-9)?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix, space: HilbertSpace) -> Self {
        Self { matrix, space }
    }

    /// Pure basis state `|k⟩⟨k|`.
    pub fn basis_state(space: HilbertSpace, k: usize) -> Self {
        let mut m = CMatrix::zeros(space.dim(), space.dim());
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self { matrix: m, space }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `Tr(op ρ)`.
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        let d = self.matrix.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                acc += op[(i, k)] * self.matrix[(k, i)];
            }
        }
        acc
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, unit trace and positivity within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let d = self.space.dim();
        if self.matrix.nrows() != d || self.matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.matrix.nrows(),
            });
        }
        let herm = self.hermiticity_error();
        if herm > tol {
            return Err(Error::InvalidParameter(format!(
                "density matrix not Hermitian (error {herm:.3e})"
            )));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {tr}"
            )));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(Error::InvalidParameter(format!(
                "density matrix eigenvalue {min:.3e} < 0"
            )));
        }
        Ok(())
    }
}
