use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::histogram::CorrelationHistogram;
use crate::fitting::{minimize, Bound, FitProblem};
use crate::{Error, Result};

/// Sum of two-sided exponential peaks fitted to a histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub centers: Vec<f64>,
    /// Peak heights in counts per bin.
    pub amplitudes: Vec<f64>,
    /// Decay constant per peak (all equal when shared).
    pub taus: Vec<f64>,
    pub shared_tau: bool,
    pub residual_norm: f64,
    pub converged: bool,
}

impl PeakFit {
    /// Shared decay constant (the first peak's when not shared).
    pub fn tau(&self) -> f64 {
        self.taus[0]
    }

    /// Integral `2Aτ` of peak `k` (counts per bin × ns).
    pub fn area(&self, k: usize) -> f64 {
        2.0 * self.amplitudes[k] * self.taus[k]
    }

    fn index_near(&self, center: f64) -> Option<usize> {
        self.centers.iter().position(|c| (c - center).abs() < 1e-6)
    }

    pub fn area_near(&self, center: f64) -> Option<f64> {
        self.index_near(center).map(|k| self.area(k))
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.amplitudes)
            .zip(&self.taus)
            .map(|((c, a), tau)| a * (-(t - c).abs() / tau).exp())
            .sum()
    }
}

/// Non-negative least squares `min ‖Ax − b‖, x ≥ 0` (Lawson-Hanson).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = a.amax().max(1e-300) * b.amax().max(1e-300);
    let tol = 1e-12 * scale * a.nrows() as f64;
    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(a.nrows(), idx.len(), |i, k| a[(i, idx[k])]);
        let zs = sub
            .svd(true, true)
            .solve(b, 1e-15)
            .unwrap_or_else(|_| DVector::zeros(idx.len()));
        let mut z = DVector::zeros(n);
        for (k, &j) in idx.iter().enumerate() {
            z[j] = zs[k];
        }
        z
    };
    for _ in 0..3 * n + 3 {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..n).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                x = z;
                break;
            }
            let alpha = (0..n)
                .filter(|&k| passive[k] && z[k] <= 0.0)
                .map(|k| x[k] / (x[k] - z[k]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= 1e-15 * x.amax().max(1e-300) {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
            if !passive.iter().any(|p| *p) {
                break;
            }
        }
    }
    x
}

fn design(t: &[f64], centers: &[f64], taus: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(t.len(), centers.len(), |i, k| {
        (-(t[i] - centers[k]).abs() / taus[k]).exp()
    })
}

/// Least-squares fit of `Σ_k A_k exp(−|τ − τ_k|/τ_r)` at fixed centers.
///
/// Amplitudes are eliminated by non-negative least squares, leaving a
/// minimization over the decay constant(s) only.
pub fn fit_double_exponential_peaks(
    hist: &CorrelationHistogram,
    centers: &[f64],
    shared_tau: bool,
) -> Result<PeakFit> {
    if centers.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one peak center is required".into(),
        ));
    }
    let t = hist.centers();
    let y = DVector::from_column_slice(hist.counts());
    let bw = hist.bin_width();
    let (lo, hi) = hist.span();
    let tau0 = initial_tau(hist).clamp(bw, 0.5 * (hi - lo));
    let k = centers.len();
    let n_tau = if shared_tau { 1 } else { k };
    let expand = |p: &[f64]| -> Vec<f64> {
        if shared_tau {
            vec![p[0]; k]
        } else {
            p.to_vec()
        }
    };
    let residuals = |p: &[f64]| -> Vec<f64> {
        let taus = expand(p);
        let a = design(&t, centers, &taus);
        let amp = nnls(&a, &y);
        (a * amp - &y).iter().copied().collect()
    };
    let problem = FitProblem::new(residuals, vec![tau0; n_tau])
        .with_bounds(vec![Bound::new(0.05 * bw, hi - lo); n_tau])
        .with_steps(vec![0.2 * tau0; n_tau])
        .with_tolerance(1e-11);
    let fit = minimize(&problem)?;
    let taus = expand(&fit.params);
    let amplitudes = nnls(&design(&t, centers, &taus), &y);
    Ok(PeakFit {
        centers: centers.to_vec(),
        amplitudes: amplitudes.iter().copied().collect(),
        taus,
        shared_tau,
        residual_norm: fit.residual_norm,
        converged: fit.converged,
    })
}

/// Distance from the tallest bin to where counts first fall below 1/e of it.
fn initial_tau(hist: &CorrelationHistogram) -> f64 {
    let c = hist.counts();
    let (imax, &peak) = c
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap_or((0, &0.0));
    let limit = peak / std::f64::consts::E;
    let right = c[imax..].iter().position(|v| *v <= limit);
    let left = c[..=imax].iter().rev().position(|v| *v <= limit);
    let steps = match (left, right) {
        (Some(l), Some(r)) => l.min(r),
        (Some(s), None) | (None, Some(s)) => s,
        (None, None) => c.len() / 4,
    };
    steps.max(1) as f64 * hist.bin_width()
}
