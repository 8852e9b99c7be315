use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Box constraint on one parameter; `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bound {
    pub const FREE: Bound = Bound {
        lower: None,
        upper: None,
    };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    pub fn at_least(lower: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: None,
        }
    }

    fn contains(&self, x: f64) -> bool {
        self.lower.is_none_or(|l| x >= l) && self.upper.is_none_or(|u| x <= u)
    }

    /// Internal (unconstrained) coordinate to external value.
    fn to_external(&self, u: f64) -> f64 {
        match (self.lower, self.upper) {
            (Some(l), Some(h)) => l + 0.5 * (h - l) * (u.sin() + 1.0),
            (Some(l), None) => l - 1.0 + (u * u + 1.0).sqrt(),
            (None, Some(h)) => h + 1.0 - (u * u + 1.0).sqrt(),
            (None, None) => u,
        }
    }

    fn to_internal(&self, x: f64) -> f64 {
        match (self.lower, self.upper) {
            (Some(l), Some(h)) => (2.0 * (x - l) / (h - l) - 1.0).clamp(-1.0, 1.0).asin(),
            (Some(l), None) => ((x - l + 1.0).powi(2) - 1.0).max(0.0).sqrt(),
            (None, Some(h)) => ((h - x + 1.0).powi(2) - 1.0).max(0.0).sqrt(),
            (None, None) => x,
        }
    }

    fn derivative(&self, u: f64) -> f64 {
        match (self.lower, self.upper) {
            (Some(l), Some(h)) => 0.5 * (h - l) * u.cos(),
            (Some(_), None) => u / (u * u + 1.0).sqrt(),
            (None, Some(_)) => -u / (u * u + 1.0).sqrt(),
            (None, None) => 1.0,
        }
    }

    fn is_at(&self, x: f64) -> bool {
        let span = match (self.lower, self.upper) {
            (Some(l), Some(h)) => (h - l).abs(),
            _ => x.abs().max(1.0),
        };
        let tol = 1e-6 * span;
        self.lower.is_some_and(|l| (x - l).abs() <= tol)
            || self.upper.is_some_and(|u| (u - x).abs() <= tol)
    }
}

type Residuals<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>;

/// Bounded least-squares problem `min Σ r_i(p)²`.
pub struct FitProblem<'a> {
    pub residuals: Residuals<'a>,
    pub initial: Vec<f64>,
    pub bounds: Vec<Bound>,
    /// Parameters held at their initial value.
    pub fixed: Vec<bool>,
    /// Initial simplex step per parameter in external units; `None` picks
    /// 10% of the starting value.
    pub steps: Option<Vec<f64>>,
    /// Simplex size tolerance in internal coordinates, relative to
    /// `1 + |coordinate|`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl<'a> FitProblem<'a> {
    pub fn new(residuals: impl Fn(&[f64]) -> Vec<f64> + 'a, initial: Vec<f64>) -> Self {
        let n = initial.len();
        Self {
            residuals: Box::new(residuals),
            initial,
            bounds: vec![Bound::FREE; n],
            fixed: vec![false; n],
            steps: None,
            tolerance: 1e-10,
            max_iterations: 20_000,
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<Bound>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn with_steps(mut self, steps: Vec<f64>) -> Self {
        self.steps = Some(steps);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.initial.len();
        for len in [self.bounds.len(), self.fixed.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if let Some(s) = &self.steps {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: s.len(),
                });
            }
        }
        for (i, (b, x)) in self.bounds.iter().zip(&self.initial).enumerate() {
            let finite = b.lower.is_none_or(f64::is_finite) && b.upper.is_none_or(f64::is_finite);
            if !finite || !x.is_finite() || !b.contains(*x) {
                return Err(Error::InvalidParameter(format!(
                    "parameter {i}: initial value {x} outside bounds {b:?}"
                )));
            }
            if let (Some(l), Some(h)) = (b.lower, b.upper) {
                if !(h > l) && !self.fixed[i] {
                    return Err(Error::InvalidParameter(format!(
                        "parameter {i}: empty bound interval"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Euclidean norm of the residual vector at `params`.
    pub residual_norm: f64,
    pub initial_residual_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Covariance of all parameters (zero rows/columns for fixed ones), if the
    /// Gauss-Newton matrix is invertible.
    pub covariance: Option<DMatrix<f64>>,
    pub at_bound: Vec<bool>,
    pub n_residuals: usize,
}

impl FitResult {
    /// One-sigma uncertainty of parameter `i`.
    pub fn sigma(&self, i: usize) -> Option<f64> {
        self.covariance.as_ref().map(|c| c[(i, i)].max(0.0).sqrt())
    }

    pub fn any_at_bound(&self) -> bool {
        self.at_bound.iter().any(|b| *b)
    }
}

struct Mapping<'p> {
    problem: &'p FitProblem<'p>,
    free: Vec<usize>,
}

impl Mapping<'_> {
    fn external(&self, u: &[f64]) -> Vec<f64> {
        let mut x = self.problem.initial.clone();
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = self.problem.bounds[i].to_external(u[k]);
        }
        x
    }

    fn cost(&self, x: &[f64]) -> f64 {
        let ss: f64 = (self.problem.residuals)(x).iter().map(|r| r * r).sum();
        if ss.is_finite() {
            ss
        } else {
            f64::INFINITY
        }
    }
}

/// Bounded Nelder-Mead minimization of the residual sum of squares.
///
/// Bounds are removed with the sine / square-root transforms; coefficients
/// follow the dimension-adaptive scheme. After the simplex collapses the
/// search is restarted from the best vertex until a restart no longer
/// improves the cost. Running out of iterations returns the best point with
/// `converged = false`.
pub fn minimize(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let free: Vec<usize> = (0..problem.initial.len())
        .filter(|i| !problem.fixed[*i])
        .collect();
    let map = Mapping { problem, free };
    let n = map.free.len();
    let mut evaluations = 1;
    let f0 = map.cost(&problem.initial);
    let initial_residual_norm = f0.sqrt();

    let u0: Vec<f64> = map
        .free
        .iter()
        .map(|&i| problem.bounds[i].to_internal(problem.initial[i]))
        .collect();
    let mut best_u = u0;
    let mut best_f = f0;
    let mut iterations = 0;
    let mut converged = n == 0;

    if n > 0 {
        let (alpha, beta, gamma, delta) = (
            1.0,
            1.0 + 2.0 / n as f64,
            0.75 - 0.5 / n as f64,
            1.0 - 1.0 / n as f64,
        );
        for _restart in 0..8 {
            let steps = initial_steps(&map, &best_u);
            let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_u.clone(), best_f)];
            for k in 0..n {
                let mut v = best_u.clone();
                v[k] += steps[k];
                let f = map.cost(&map.external(&v));
                evaluations += 1;
                simplex.push((v, f));
            }
            let start_f = best_f;
            let mut collapsed = false;
            while iterations < problem.max_iterations {
                simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
                let size = simplex[1..]
                    .iter()
                    .map(|(v, _)| {
                        v.iter()
                            .zip(&simplex[0].0)
                            .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
                            .fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max);
                if size < problem.tolerance
                    || (simplex[n].1 - simplex[0].1).abs() <= 1e-30 * (1.0 + simplex[0].1)
                        && size < 1e3 * problem.tolerance
                {
                    collapsed = true;
                    break;
                }
                iterations += 1;
                let centroid: Vec<f64> = (0..n)
                    .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / n as f64)
                    .collect();
                let worst = simplex[n].clone();
                let along = |t: f64| -> Vec<f64> {
                    centroid
                        .iter()
                        .zip(&worst.0)
                        .map(|(c, w)| c + t * (c - w))
                        .collect()
                };
                let mut eval = |v: &Vec<f64>| {
                    evaluations += 1;
                    map.cost(&map.external(v))
                };
                let xr = along(alpha);
                let fr = eval(&xr);
                if fr < simplex[0].1 {
                    let xe = along(alpha * beta);
                    let fe = eval(&xe);
                    simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                } else if fr < simplex[n - 1].1 {
                    simplex[n] = (xr, fr);
                } else {
                    let outside = fr < worst.1;
                    let xc = if outside {
                        along(alpha * gamma)
                    } else {
                        along(-gamma)
                    };
                    let fc = eval(&xc);
                    if fc < fr.min(worst.1) || (outside && fc <= fr) {
                        simplex[n] = (xc, fc);
                    } else {
                        let b = simplex[0].0.clone();
                        for (v, f) in simplex.iter_mut().skip(1) {
                            for (x, b) in v.iter_mut().zip(&b) {
                                *x = b + delta * (*x - b);
                            }
                            *f = eval(v);
                        }
                    }
                }
            }
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[0].1 <= best_f {
                best_u = simplex[0].0.clone();
                best_f = simplex[0].1;
            }
            if !collapsed {
                converged = false;
                break;
            }
            converged = true;
            if start_f - best_f <= 1e-12 * (start_f.abs() + 1e-300) {
                break;
            }
        }
    }

    let params = map.external(&best_u);
    let residuals = (problem.residuals)(&params);
    let at_bound = (0..params.len())
        .map(|i| !problem.fixed[i] && problem.bounds[i].is_at(params[i]))
        .collect();
    let covariance = covariance(problem, &map.free, &params, &residuals);
    Ok(FitResult {
        residual_norm: best_f.sqrt(),
        initial_residual_norm,
        params,
        iterations,
        evaluations,
        converged,
        covariance,
        at_bound,
        n_residuals: residuals.len(),
    })
}

fn initial_steps(map: &Mapping, u: &[f64]) -> Vec<f64> {
    let problem = map.problem;
    map.free
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let x = problem.bounds[i].to_external(u[k]);
            let step = problem.steps.as_ref().map_or_else(
                || if x != 0.0 { 0.1 * x.abs() } else { 0.1 },
                |s| s[i].abs(),
            );
            let slope = problem.bounds[i].derivative(u[k]).abs();
            let h = if slope > 1e-3 { step / slope } else { 0.5 };
            match (problem.bounds[i].lower, problem.bounds[i].upper) {
                (Some(_), Some(_)) => h.clamp(1e-3, 0.5),
                _ => h.max(1e-8),
            }
        })
        .collect()
}

/// `s² (JᵀJ)⁻¹` from a central-difference Jacobian in external coordinates.
fn covariance(problem: &FitProblem, free: &[usize], x: &[f64], r0: &[f64]) -> Option<DMatrix<f64>> {
    let (m, n) = (r0.len(), free.len());
    let total = x.len();
    if n == 0 || m <= n {
        return None;
    }
    let mut jac = DMatrix::zeros(m, n);
    for (k, &i) in free.iter().enumerate() {
        let b = problem.bounds[i];
        let h = 1e-6 * x[i].abs().max(1e-3);
        let (lo, hi) = (x[i] - h, x[i] + h);
        let (lo, hi) = (
            if b.contains(lo) { lo } else { x[i] },
            if b.contains(hi) { hi } else { x[i] },
        );
        let mut xp = x.to_vec();
        xp[i] = hi;
        let rp = (problem.residuals)(&xp);
        xp[i] = lo;
        let rm = (problem.residuals)(&xp);
        for j in 0..m {
            jac[(j, k)] = (rp[j] - rm[j]) / (hi - lo);
        }
    }
    let ss: f64 = r0.iter().map(|r| r * r).sum();
    let s2 = ss / (m - n) as f64;
    let jtj = jac.transpose() * &jac;
    let inv = jtj.clone().try_inverse()?;
    if inv.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut cov = DMatrix::zeros(total, total);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            cov[(i, j)] = s2 * inv[(a, b)];
        }
    }
    Some(cov)
}

/// Convenience wrapper returning the residual vector norm.
pub fn residual_norm(residuals: &[f64]) -> f64 {
    DVector::from_column_slice(residuals).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let p = FitProblem::new(
            |x| vec![x[0] - 3.0, 2.0 * (x[1] + 1.0), x[2] - 0.5],
            vec![0.0, 0.0, 0.0],
        );
        let r = minimize(&p).unwrap();
        assert!(r.converged);
        for (a, b) in r.params.iter().zip([3.0, -1.0, 0.5]) {
            assert!((a - b).abs() < 1e-6, "{:?}", r.params);
        }
    }

    #[test]
    fn rosenbrock() {
        let p = FitProblem::new(
            |x| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]],
            vec![-1.2, 1.0],
        );
        let r = minimize(&p).unwrap();
        assert!(
            (r.params[0] - 1.0).abs() < 1e-4 && (r.params[1] - 1.0).abs() < 1e-4,
            "{:?}",
            r.params
        );
        assert!(r.residual_norm <= r.initial_residual_norm);
    }

    #[test]
    fn converged_point_is_fixed() {
        let res = |x: &[f64]| vec![x[0] * x[0] - 2.0, x[0] - x[1], 0.1 * x[1] + 0.3];
        let first = minimize(&FitProblem::new(res, vec![1.0, 1.0])).unwrap();
        let again = minimize(&FitProblem::new(res, first.params.clone())).unwrap();
        assert!((again.residual_norm - first.residual_norm).abs() < 1e-10);
    }

    #[test]
    fn bounds_are_respected_and_flagged() {
        let p =
            FitProblem::new(|x| vec![x[0] + 2.0, x[1] - 5.0], vec![1.0, 1.0]).with_bounds(vec![
                Bound::new(0.0, 4.0),
                Bound {
                    lower: None,
                    upper: Some(3.0),
                },
            ]);
        let r = minimize(&p).unwrap();
        assert!(r.params[0] >= 0.0 && r.params[0] < 1e-6, "{:?}", r.params);
        assert!(r.params[1] <= 3.0 && r.params[1] > 3.0 - 1e-6);
        assert_eq!(r.at_bound, vec![true, true]);
    }

    #[test]
    fn fixed_parameter_stays() {
        let p = FitProblem::new(|x| vec![x[0] - 1.0, x[1] - 2.0], vec![0.0, 7.0])
            .with_fixed(vec![false, true]);
        let r = minimize(&p).unwrap();
        assert_eq!(r.params[1], 7.0);
        assert!((r.params[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let p = FitProblem::new(
            |x| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]],
            vec![-1.2, 1.0],
        )
        .with_max_iterations(5);
        let r = minimize(&p).unwrap();
        assert!(!r.converged);
        assert!(r.residual_norm <= r.initial_residual_norm);
    }

    #[test]
    fn covariance_of_linear_fit() {
        // y = a + b x with known residual scatter; compare to the normal equations.
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 1.0 + 0.5 * x + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let p = FitProblem::new(
            |q| {
                xs.iter()
                    .zip(&ys)
                    .map(|(x, y)| q[0] + q[1] * x - y)
                    .collect()
            },
            vec![0.0, 0.0],
        );
        let r = minimize(&p).unwrap();
        let a = DMatrix::from_fn(20, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let inv = (a.transpose() * &a).try_inverse().unwrap();
        let s2 = r.residual_norm.powi(2) / 18.0;
        let cov = r.covariance.unwrap();
        for i in 0..2 {
            assert!((cov[(i, i)] - s2 * inv[(i, i)]).abs() < 1e-6 * s2 * inv[(i, i)]);
        }
    }

    #[test]
    fn rejects_start_outside_bounds() {
        let p = FitProblem::new(|x| vec![x[0]], vec![5.0]).with_bounds(vec![Bound::new(0.0, 1.0)]);
        assert!(minimize(&p).is_err());
    }
}
