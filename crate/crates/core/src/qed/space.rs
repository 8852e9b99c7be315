use nalgebra::DMatrix;
use num_complex::Complex64;

use super::CMatrix;
use crate::error::{ensure, Result};

/// Index of a QD level in the three-level basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdLevel {
    Ground = 0,
    X = 1,
    Y = 2,
}

/// Truncated Hilbert space `QD(3) ⊗ Fock_H(n) ⊗ Fock_V(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    n_fock: usize,
}

impl Default for HilbertSpace {
    fn default() -> Self {
        Self { n_fock: 3 }
    }
}

impl HilbertSpace {
    pub fn new(n_fock: usize) -> Result<Self> {
        ensure(n_fock >= 2, || format!("n_fock must be >= 2, got {n_fock}"))?;
        Ok(Self { n_fock })
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn dim(&self) -> usize {
        3 * self.n_fock * self.n_fock
    }

    /// Basis index of `|qd, n_h, n_v⟩`.
    pub fn index(&self, qd: QdLevel, n_h: usize, n_v: usize) -> usize {
        debug_assert!(n_h < self.n_fock && n_v < self.n_fock);
        (qd as usize * self.n_fock + n_h) * self.n_fock + n_v
    }

    /// Index of `|g, 0, 0⟩`.
    pub fn ground(&self) -> usize {
        0
    }

    fn kron3(&self, qd: &CMatrix, h: &CMatrix, v: &CMatrix) -> CMatrix {
        qd.kronecker(&h.kronecker(v))
    }

    fn destroy(&self) -> CMatrix {
        let n = self.n_fock;
        DMatrix::from_fn(n, n, |i, j| {
            if j == i + 1 {
                Complex64::new((j as f64).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn qd_op(&self, row: usize, col: usize) -> CMatrix {
        let mut m = CMatrix::zeros(3, 3);
        m[(row, col)] = Complex64::new(1.0, 0.0);
        m
    }

    fn id_fock(&self) -> CMatrix {
        CMatrix::identity(self.n_fock, self.n_fock)
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim(), self.dim())
    }

    /// Annihilation operator of the H cavity mode.
    pub fn a_h(&self) -> CMatrix {
        self.kron3(&CMatrix::identity(3, 3), &self.destroy(), &self.id_fock())
    }

    /// Annihilation operator of the V cavity mode.
    pub fn a_v(&self) -> CMatrix {
        self.kron3(&CMatrix::identity(3, 3), &self.id_fock(), &self.destroy())
    }

    /// Lowering operator `|g⟩⟨X|`.
    pub fn sigma_x(&self) -> CMatrix {
        self.kron3(&self.qd_op(0, 1), &self.id_fock(), &self.id_fock())
    }

    /// Lowering operator `|g⟩⟨Y|`.
    pub fn sigma_y(&self) -> CMatrix {
        self.kron3(&self.qd_op(0, 2), &self.id_fock(), &self.id_fock())
    }

    /// Projector onto the excited QD manifold `|X⟩⟨X| + |Y⟩⟨Y|`.
    pub fn excited_projector(&self) -> CMatrix {
        let p = self.qd_op(1, 1) + self.qd_op(2, 2);
        self.kron3(&p, &self.id_fock(), &self.id_fock())
    }

    /// Projector onto the ground state `|g,0,0⟩`.
    pub fn ground_projector(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_truncation() {
        assert!(HilbertSpace::new(1).is_err());
        assert_eq!(HilbertSpace::new(2).unwrap().dim(), 12);
        assert_eq!(HilbertSpace::default().dim(), 27);
    }

    #[test]
    fn operators_have_space_dimension() {
        let s = HilbertSpace::new(4).unwrap();
        for op in [
            s.a_h(),
            s.a_v(),
            s.sigma_x(),
            s.sigma_y(),
            s.excited_projector(),
        ] {
            assert_eq!(op.nrows(), s.dim());
            assert_eq!(op.ncols(), s.dim());
        }
    }

    #[test]
    fn mode_operators_commute_and_act_on_basis() {
        let s = HilbertSpace::new(3).unwrap();
        let (ah, av) = (s.a_h(), s.a_v());
        let comm = &ah * &av - &av * &ah;
        assert!(comm.norm() < 1e-14);
        let i = s.index(QdLevel::X, 2, 1);
        let j = s.index(QdLevel::X, 1, 1);
        assert!((ah[(j, i)].re - 2f64.sqrt()).abs() < 1e-14);
        let sy = s.sigma_y();
        let k = s.index(QdLevel::Y, 0, 2);
        let l = s.index(QdLevel::Ground, 0, 2);
        assert_eq!(sy[(l, k)].re, 1.0);
    }
}
