use num_complex::Complex64;

use super::{CMatrix, DensityMatrix, Liouvillian};
use crate::{Error, Result};

/// Step control for [`evolve`].
#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Maximum local error per step (max-norm over matrix elements), estimated
    /// by step doubling.
    pub tolerance: f64,
    /// Step cap as a fraction of `1/‖L‖` (row-sum bound); RK4 is stable for
    /// `h·|λ| ≲ 2.8`.
    pub stability_factor: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            stability_factor: 2.0,
            max_steps: 20_000_000,
        }
    }
}

struct Rk4<'a> {
    l: &'a Liouvillian,
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl<'a> Rk4<'a> {
    fn new(l: &'a Liouvillian) -> Self {
        let n = l.sparse().dim();
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            l,
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
        }
    }

    /// One classical RK4 step; `k1 = L y` must already be in `self.k[0]`.
    fn step(&mut self, y: &[Complex64], h: f64, out: &mut [Complex64]) {
        let sp = self.l.sparse();
        let hc = |x: f64| Complex64::new(x, 0.0);
        for (t, (yi, k)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k[0])) {
            *t = yi + hc(0.5 * h) * k;
        }
        let [k1, k2, k3, k4] = &mut self.k;
        sp.mul_into(&self.tmp, k2);
        for (t, (yi, k)) in self.tmp.iter_mut().zip(y.iter().zip(k2.iter())) {
            *t = yi + hc(0.5 * h) * k;
        }
        sp.mul_into(&self.tmp, k3);
        for (t, (yi, k)) in self.tmp.iter_mut().zip(y.iter().zip(k3.iter())) {
            *t = yi + hc(h) * k;
        }
        sp.mul_into(&self.tmp, k4);
        let w = hc(h / 6.0);
        for i in 0..y.len() {
            out[i] = y[i] + w * (k1[i] + hc(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
    }
}

/// Integrates `dρ/dt = L[ρ]` with adaptive classical RK4 and returns `ρ(t)`
/// on every point of `t_grid` (ns).
///
/// The grid must start at 0 and increase strictly. Local errors are
/// estimated by step doubling; a step that cannot meet the tolerance, or a
/// trace drift above 1e-8, is reported as [`Error::SolverFailure`].
pub fn evolve(
    liouvillian: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<DensityMatrix>> {
    let space = *liouvillian.space();
    if rho0.space() != &space {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: rho0.space().dim(),
        });
    }
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return Err(Error::InvalidParameter("time grid must start at 0".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "time grid must be finite and strictly increasing".into(),
        ));
    }

    let d = space.dim();
    let n = d * d;
    let bound = liouvillian.sparse().gershgorin_bound();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(rho0.clone());
    if bound == 0.0 {
        out.extend(t_grid[1..].iter().map(|_| rho0.clone()));
        return Ok(out);
    }
    let h_cap = opts.stability_factor / bound;

    let mut y: Vec<Complex64> = rho0.matrix().as_slice().to_vec();
    let trace0 = rho0.trace();
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    let mut half = vec![Complex64::new(0.0, 0.0); n];
    let mut two = vec![Complex64::new(0.0, 0.0); n];
    let mut f0 = vec![Complex64::new(0.0, 0.0); n];
    let mut rk = Rk4::new(liouvillian);
    let mut h = h_cap;
    let mut steps = 0usize;

    for w in t_grid.windows(2) {
        let (mut t, t_end) = (w[0], w[1]);
        while t < t_end {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::SolverFailure(format!(
                    "exceeded {} steps at t = {t} ns",
                    opts.max_steps
                )));
            }
            let remaining = t_end - t;
            let last = h.min(h_cap) >= remaining;
            let h_try = if last { remaining } else { h.min(h_cap) };

            liouvillian.sparse().mul_into(&y, &mut f0);
            rk.k[0].copy_from_slice(&f0);
            rk.step(&y, h_try, &mut full);
            rk.k[0].copy_from_slice(&f0);
            rk.step(&y, 0.5 * h_try, &mut half);
            liouvillian.sparse().mul_into(&half, &mut rk.k[0]);
            rk.step(&half, 0.5 * h_try, &mut two);

            let err = full
                .iter()
                .zip(&two)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
                / 15.0;
            if !err.is_finite() {
                return Err(Error::SolverFailure(format!(
                    "non-finite state at t = {t} ns"
                )));
            }
            let factor = if err == 0.0 {
                2.0
            } else {
                (0.9 * (opts.tolerance / err).powf(0.2)).clamp(0.2, 2.0)
            };
            if err <= opts.tolerance {
                std::mem::swap(&mut y, &mut two);
                t = if last { t_end } else { t + h_try };
                if !last || factor < 1.0 {
                    h = h_try * factor;
                }
            } else {
                h = h_try * factor;
                if h < 1e-15 * (1.0 + t.abs()) {
                    return Err(Error::SolverFailure(format!(
                        "step size underflow at t = {t} ns"
                    )));
                }
            }
        }
        let m = CMatrix::from_column_slice(d, d, &y);
        let drift = (m.trace() - trace0).norm();
        if drift > 1e-8 {
            return Err(Error::SolverFailure(format!(
                "trace drifted by {drift:.3e} at t = {t_end} ns"
            )));
        }
        out.push(DensityMatrix::from_matrix_unchecked(m, space));
    }
    Ok(out)
}
