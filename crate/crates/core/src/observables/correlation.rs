use serde::{Deserialize, Serialize};

use crate::qed::{
    build_hamiltonian, build_liouvillian, evolve, steady_state, CMatrix, DensityMatrix, Detection,
    EvolveOptions, HilbertSpace, SystemParams,
};
use crate::{Error, Result};

/// Detected flux below which a normalized correlation is meaningless.
const MIN_FLUX: f64 = 1e-18;

/// Second-order correlation sampled on an increasing delay grid (ns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub tau: Vec<f64>,
    pub values: Vec<f64>,
}

impl CorrelationCurve {
    pub fn new(tau: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if tau.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: tau.len(),
                found: values.len(),
            });
        }
        if tau.is_empty() {
            return Err(Error::InvalidParameter("correlation curve is empty".into()));
        }
        if tau.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "delay grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { tau, values })
    }

    /// Mirrors a curve given on `τ ≥ 0` onto negative delays.
    pub fn from_one_sided(tau: &[f64], values: &[f64]) -> Result<Self> {
        if tau.first().is_some_and(|t| *t < 0.0) {
            return Err(Error::InvalidParameter(
                "one-sided delays must be >= 0".into(),
            ));
        }
        let skip = usize::from(tau.first() == Some(&0.0));
        let mut t: Vec<f64> = tau[skip..].iter().rev().map(|x| -x).collect();
        let mut v: Vec<f64> = values[skip.min(values.len())..]
            .iter()
            .rev()
            .copied()
            .collect();
        t.extend_from_slice(tau);
        v.extend_from_slice(values);
        Self::new(t, v)
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Linear interpolation, clamped to the end values outside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.tau.len();
        if t <= self.tau[0] {
            return self.values[0];
        }
        if t >= self.tau[n - 1] {
            return self.values[n - 1];
        }
        let k = self.tau.partition_point(|x| *x <= t);
        let (t0, t1) = (self.tau[k - 1], self.tau[k]);
        let s = (t - t0) / (t1 - t0);
        self.values[k - 1] * (1.0 - s) + self.values[k] * s
    }

    pub fn at_zero(&self) -> f64 {
        self.value_at(0.0)
    }

    /// Common spacing if the grid is uniform to within 1e-6 relative.
    pub fn uniform_spacing(&self) -> Option<f64> {
        if self.tau.len() < 2 {
            return None;
        }
        let dt = (self.tau[self.tau.len() - 1] - self.tau[0]) / (self.tau.len() - 1) as f64;
        let uniform = self
            .tau
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
        uniform.then_some(dt)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            tau: self.tau.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }
}

/// CW intensity correlation `g²(τ)` of the detected light via the quantum
/// regression theorem.
///
/// `tau_grid` holds non-negative, strictly increasing delays; the result is
/// mirrored to negative delays. With unpolarized detection the summed
/// intensity of both modes is correlated.
pub fn g2_cw(
    params: &SystemParams,
    space: &HilbertSpace,
    detection: &Detection,
    tau_grid: &[f64],
) -> Result<CorrelationCurve> {
    if tau_grid.is_empty() || tau_grid[0] < 0.0 {
        return Err(Error::InvalidParameter(
            "tau grid must be non-empty and start at tau >= 0".into(),
        ));
    }
    let h = build_hamiltonian(params, space)?;
    let l = build_liouvillian(params, space, &h)?;
    let rho = steady_state(&l)?;
    let channels = detection.operators(space);
    let n_op = detection.number_operator(space);
    let flux = rho.expectation(&n_op).re;
    if !(flux > MIN_FLUX) {
        return Err(Error::NoDetectedFlux);
    }
    let d = space.dim();
    let post = channels.iter().fold(CMatrix::zeros(d, d), |acc, c| {
        acc + c * rho.matrix() * c.adjoint()
    }) / num_complex::Complex64::new(flux, 0.0);
    let post = DensityMatrix::from_matrix_unchecked(post, *space);

    let starts_at_zero = tau_grid[0] == 0.0;
    let mut grid = Vec::with_capacity(tau_grid.len() + 1);
    if !starts_at_zero {
        grid.push(0.0);
    }
    grid.extend_from_slice(tau_grid);
    let states = evolve(&l, &post, &grid, EvolveOptions::default())?;
    let values: Vec<f64> = states
        .iter()
        .skip(usize::from(!starts_at_zero))
        .map(|s| (s.expectation(&n_op).re / flux).max(0.0))
        .collect();
    CorrelationCurve::from_one_sided(tau_grid, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn mirrored_grid() {
        let c = CorrelationCurve::from_one_sided(&[0.0, 1.0, 2.0], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(c.tau, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(c.values, vec![1.0, 0.5, 0.0, 0.5, 1.0]);
        assert_eq!(c.uniform_spacing(), Some(1.0));
        assert_eq!(c.value_at(0.5), 0.25);
        assert_eq!(c.value_at(-9.0), 1.0);
        let d = CorrelationCurve::from_one_sided(&[0.5, 1.0], &[0.2, 0.3]).unwrap();
        assert_eq!(d.tau, vec![-1.0, -0.5, 0.5, 1.0]);
    }

    #[test]
    fn rejects_unsorted_grid() {
        assert!(CorrelationCurve::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(CorrelationCurve::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn empty_cavity_is_coherent() {
        let p = SystemParams::reference_device()
            .with_coupling(0.0)
            .with_laser(2.0)
            .with_drive(0.5);
        let c = g2_cw(
            &p,
            &HilbertSpace::new(4).unwrap(),
            &Detection::h(),
            &grid(0.2, 5),
        )
        .unwrap();
        for v in &c.values {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn crossed_detection_antibunches_and_decorrelates() {
        let p = SystemParams::reference_device();
        let c = g2_cw(
            &p,
            &HilbertSpace::default(),
            &Detection::v(),
            &[0.0, 0.5, 20.0],
        )
        .unwrap();
        assert!(c.at_zero() < 0.1, "{}", c.at_zero());
        assert!(c.values.iter().all(|v| *v >= 0.0));
        assert!(
            (c.value_at(20.0) - 1.0).abs() < 1e-4,
            "{}",
            c.value_at(20.0)
        );
    }

    #[test]
    fn no_flux_is_an_error() {
        let p = SystemParams::reference_device().with_drive(0.0);
        let err = g2_cw(&p, &HilbertSpace::new(2).unwrap(), &Detection::h(), &[0.0]).unwrap_err();
        assert!(matches!(err, Error::NoDetectedFlux));
    }
}
