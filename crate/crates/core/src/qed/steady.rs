use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{CMatrix, DensityMatrix, Liouvillian};
use crate::{Error, Result};

// Hermitian density matrices are parametrized by D² real coordinates laid
// out like the column-major vectorization: slot (i, j) holds Re ρ_ij for
// i ≤ j and Im ρ_ji for i > j. L maps Hermitian to Hermitian matrices, so it
// is a real linear map on these coordinates, and the steady-state solve runs
// in real arithmetic.

fn slot(i: usize, j: usize, d: usize) -> usize {
    i + j * d
}

/// Real coordinates of a Hermitian matrix given as a column-major vector.
fn to_real(v: &[Complex64], d: usize, out: &mut [f64]) {
    for j in 0..d {
        for i in 0..d {
            out[slot(i, j, d)] = if i <= j {
                v[slot(i, j, d)].re
            } else {
                v[slot(j, i, d)].im
            };
        }
    }
}

fn from_real(x: &[f64], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Complex64::new(x[slot(i, i, d)], 0.0),
        std::cmp::Ordering::Less => Complex64::new(x[slot(i, j, d)], x[slot(j, i, d)]),
        std::cmp::Ordering::Greater => Complex64::new(x[slot(j, i, d)], -x[slot(i, j, d)]),
    })
}

/// Matrix of `L` in the real Hermitian coordinates.
pub(crate) fn real_representation(l: &CMatrix, d: usize) -> DMatrix<f64> {
    let n = d * d;
    let mut out = DMatrix::<f64>::zeros(n, n);
    let mut image = vec![Complex64::new(0.0, 0.0); n];
    let mut coords = vec![0.0; n];
    let i_unit = Complex64::new(0.0, 1.0);
    for j in 0..d {
        for i in 0..d {
            let q = slot(i, j, d);
            match i.cmp(&j) {
                // E_ii
                std::cmp::Ordering::Equal => {
                    for (k, v) in image.iter_mut().enumerate() {
                        *v = l[(k, q)];
                    }
                }
                // E_ij + E_ji
                std::cmp::Ordering::Less => {
                    let t = slot(j, i, d);
                    for (k, v) in image.iter_mut().enumerate() {
                        *v = l[(k, q)] + l[(k, t)];
                    }
                }
                // i (E_ji − E_ij), carrying Im ρ_ji
                std::cmp::Ordering::Greater => {
                    let t = slot(j, i, d);
                    for (k, v) in image.iter_mut().enumerate() {
                        *v = i_unit * (l[(k, t)] - l[(k, q)]);
                    }
                }
            }
            to_real(&image, d, &mut coords);
            out.column_mut(q).copy_from_slice(&coords);
        }
    }
    out
}

/// Solves `L[ρ] = 0` with `Tr ρ = 1`.
///
/// The equation for the ground-state population is redundant (trace
/// preservation) and is replaced by the trace condition; the resulting
/// square system is solved by dense LU. A second kernel vector shows up as a
/// vanishing pivot and is reported as [`Error::DegenerateSteadyState`].
pub fn steady_state(liouvillian: &Liouvillian) -> Result<DensityMatrix> {
    let d = liouvillian.space().dim();
    let n = d * d;
    let mut a = real_representation(liouvillian.matrix(), d);
    a.row_mut(0).fill(0.0);
    for i in 0..d {
        a[(0, slot(i, i, d))] = 1.0;
    }
    let scale = a.amax();
    let lu = a.lu();
    let u = lu.u();
    let (mut umin, mut umax) = (f64::INFINITY, 0.0f64);
    for k in 0..n {
        let p = u[(k, k)].abs();
        umin = umin.min(p);
        umax = umax.max(p);
    }
    if !(umin > 1e-12 * umax.max(scale)) {
        return Err(Error::DegenerateSteadyState);
    }
    let mut b = DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let x = lu.solve(&b).ok_or(Error::DegenerateSteadyState)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure("non-finite steady state".into()));
    }

    let rho = from_real(x.as_slice(), d);
    let residual = liouvillian.apply(&rho)?;
    let l_norm = liouvillian.sparse().gershgorin_bound();
    let res = residual.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if res > 1e-9 * l_norm {
        return Err(Error::SolverFailure(format!(
            "steady-state residual {res:.3e} exceeds 1e-9·‖L‖ = {:.3e}",
            1e-9 * l_norm
        )));
    }
    Ok(DensityMatrix::from_matrix_unchecked(
        rho,
        *liouvillian.space(),
    ))
}
