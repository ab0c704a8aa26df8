//! Damped nonlinear least-squares shared by the analysis modules.
//!
//! Levenberg-Marquardt style adaptive damping on the Gauss-Newton normal
//! equations, with 1σ uncertainties and covariance from the normal matrix
//! at the optimum. Positive-only parameters are handled by an internal log
//! transformation rather than hard bounds.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

/// Relative finite-difference step for [`numeric_jacobian`].
const FD_RELATIVE_STEP: f64 = 1e-6;
/// Absolute floor for the finite-difference step.
const FD_ABSOLUTE_FLOOR: f64 = 1e-12;

/// Damping schedule: multiply on rejected step, divide on accepted step.
const DAMPING_UP: f64 = 3.0;
const DAMPING_DOWN: f64 = 2.0;
/// Initial damping as a fraction of the largest normal-matrix diagonal.
const DAMPING_INIT_FRAC: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid fit problem: {0}")]
    InvalidProblem(String),
    #[error("model returned a non-finite value at parameters {params:?}")]
    NonFiniteModel { params: Vec<f64> },
    #[error("singular normal matrix; consider rescaling parameters or data")]
    SingularNormalMatrix,
}

/// How a parameter is represented inside the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamScale {
    /// Unconstrained, used as-is.
    Linear,
    /// Constrained to be positive via an internal log transform.
    LogPositive,
}

/// A parametric model `y = f(params; x)` evaluated over a shared abscissa.
pub trait FitModel {
    fn eval(&self, params: &[f64], x: &[f64]) -> Vec<f64>;

    /// Analytic Jacobian ∂f_i/∂p_j as an (n_points × n_params) matrix.
    /// Models without one fall back to [`numeric_jacobian`].
    fn jacobian(&self, params: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
        let _ = (params, x);
        None
    }
}

impl<F> FitModel for F
where
    F: Fn(&[f64], &[f64]) -> Vec<f64>,
{
    fn eval(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        self(params, x)
    }
}

/// Straight line `y = p0 + p1·x`.
pub struct LinearModel;

impl FitModel for LinearModel {
    fn eval(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| params[0] + params[1] * xi).collect()
    }

    fn jacobian(&self, _params: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
        let mut j = DMatrix::zeros(x.len(), 2);
        for (i, &xi) in x.iter().enumerate() {
            j[(i, 0)] = 1.0;
            j[(i, 1)] = xi;
        }
        Some(j)
    }
}

/// A weighted least-squares problem over sampled data.
pub struct FitProblem<'a> {
    pub model: &'a dyn FitModel,
    pub x: &'a [f64],
    pub y: &'a [f64],
    /// Per-point 1σ; unit weights when absent.
    pub y_err: Option<&'a [f64]>,
    pub initial: Vec<f64>,
    /// One entry per parameter; shorter vectors are padded with `Linear`.
    pub scales: Vec<ParamScale>,
    pub max_iterations: usize,
    /// Convergence threshold on the relative cost decrease of an accepted step.
    pub cost_tolerance: f64,
}

impl<'a> FitProblem<'a> {
    pub fn new(
        model: &'a dyn FitModel,
        x: &'a [f64],
        y: &'a [f64],
        y_err: Option<&'a [f64]>,
        initial: Vec<f64>,
    ) -> Self {
        Self {
            model,
            x,
            y,
            y_err,
            initial,
            scales: Vec::new(),
            max_iterations: 200,
            cost_tolerance: 1e-12,
        }
    }

    pub fn with_scales(mut self, scales: Vec<ParamScale>) -> Self {
        self.scales = scales;
        self
    }

    fn scale_of(&self, i: usize) -> ParamScale {
        self.scales.get(i).copied().unwrap_or(ParamScale::Linear)
    }

    fn validate(&self) -> Result<(), FitError> {
        if self.x.len() != self.y.len() {
            return Err(FitError::InvalidProblem(format!(
                "x has {} points but y has {}",
                self.x.len(),
                self.y.len()
            )));
        }
        if let Some(err) = self.y_err {
            if err.len() != self.y.len() {
                return Err(FitError::InvalidProblem(
                    "y_err length differs from data length".into(),
                ));
            }
            if err.iter().any(|&e| !(e > 0.0)) {
                return Err(FitError::InvalidProblem(
                    "y_err entries must be positive".into(),
                ));
            }
        }
        if self.x.len() < self.initial.len() {
            return Err(FitError::InvalidProblem(format!(
                "{} data points cannot constrain {} parameters",
                self.x.len(),
                self.initial.len()
            )));
        }
        if self.initial.is_empty() {
            return Err(FitError::InvalidProblem("no parameters to fit".into()));
        }
        for (i, &p) in self.initial.iter().enumerate() {
            if !p.is_finite() {
                return Err(FitError::InvalidProblem(format!(
                    "initial parameter {i} is not finite"
                )));
            }
            if self.scale_of(i) == ParamScale::LogPositive && p <= 0.0 {
                return Err(FitError::InvalidProblem(format!(
                    "initial parameter {i} must be positive for a log-scaled parameter"
                )));
            }
        }
        Ok(())
    }
}

/// Parameter estimates with uncertainties and residual diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub estimates: Vec<f64>,
    /// 1σ uncertainties, √cov_ii.
    pub sigmas: Vec<f64>,
    /// Covariance matrix, row-major n_params × n_params.
    pub covariance: Vec<f64>,
    /// √(Σ weighted squared residuals) at the optimum.
    pub residual_norm: f64,
    pub reduced_chi_square: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_points: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn covariance_entry(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.estimates.len() + j]
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.covariance_entry(i, j) / (self.sigmas[i] * self.sigmas[j])
    }
}

fn to_internal(p: &[f64], problem: &FitProblem) -> DVector<f64> {
    DVector::from_iterator(
        p.len(),
        p.iter().enumerate().map(|(i, &v)| match problem.scale_of(i) {
            ParamScale::Linear => v,
            ParamScale::LogPositive => v.ln(),
        }),
    )
}

fn to_external(u: &DVector<f64>, problem: &FitProblem) -> Vec<f64> {
    u.iter()
        .enumerate()
        .map(|(i, &v)| match problem.scale_of(i) {
            ParamScale::Linear => v,
            ParamScale::LogPositive => v.exp(),
        })
        .collect()
}

/// Weighted residual vector r_i = (y_i − f_i)/σ_i and its squared norm.
fn residuals(problem: &FitProblem, params: &[f64]) -> Result<(DVector<f64>, f64), FitError> {
    let f = problem.model.eval(params, problem.x);
    if f.len() != problem.y.len() {
        return Err(FitError::InvalidProblem(
            "model output length differs from data length".into(),
        ));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteModel {
            params: params.to_vec(),
        });
    }
    let r = DVector::from_iterator(
        f.len(),
        f.iter().zip(problem.y).enumerate().map(|(i, (&fi, &yi))| {
            let w = problem.y_err.map_or(1.0, |e| 1.0 / e[i]);
            (yi - fi) * w
        }),
    );
    let cost = r.norm_squared();
    Ok((r, cost))
}

/// Central-difference Jacobian ∂f_i/∂p_j with per-parameter relative step.
pub fn numeric_jacobian(
    model: &dyn FitModel,
    params: &[f64],
    x: &[f64],
) -> Result<DMatrix<f64>, FitError> {
    let n = x.len();
    let np = params.len();
    let mut j = DMatrix::zeros(n, np);
    let mut work = params.to_vec();
    for k in 0..np {
        let step = (params[k].abs() * FD_RELATIVE_STEP).max(FD_ABSOLUTE_FLOOR);
        work[k] = params[k] + step;
        let hi = model.eval(&work, x);
        work[k] = params[k] - step;
        let lo = model.eval(&work, x);
        work[k] = params[k];
        if hi.iter().chain(lo.iter()).any(|v| !v.is_finite()) {
            return Err(FitError::NonFiniteModel {
                params: work.clone(),
            });
        }
        for i in 0..n {
            j[(i, k)] = (hi[i] - lo[i]) / (2.0 * step);
        }
    }
    Ok(j)
}

/// Jacobian in internal coordinates with row weighting applied.
fn weighted_internal_jacobian(
    problem: &FitProblem,
    params: &[f64],
) -> Result<DMatrix<f64>, FitError> {
    let mut j = match problem.model.jacobian(params, problem.x) {
        Some(j) => j,
        None => numeric_jacobian(problem.model, params, problem.x)?,
    };
    // chain rule for log-transformed parameters: ∂f/∂u = ∂f/∂p · p
    for k in 0..params.len() {
        if problem.scale_of(k) == ParamScale::LogPositive {
            let p = params[k];
            for i in 0..j.nrows() {
                j[(i, k)] *= p;
            }
        }
    }
    if let Some(err) = problem.y_err {
        for i in 0..j.nrows() {
            let w = 1.0 / err[i];
            for k in 0..j.ncols() {
                j[(i, k)] *= w;
            }
        }
    }
    Ok(j)
}

/// Minimize the weighted squared residuals of `problem`.
///
/// Accepted cost is monotonically non-increasing; the `converged` flag is
/// set once an accepted step improves the cost by less than
/// `cost_tolerance` in relative terms.
pub fn least_squares(problem: &FitProblem) -> Result<FitResult, FitError> {
    problem.validate()?;
    let np = problem.initial.len();

    let mut u = to_internal(&problem.initial, problem);
    let mut params = to_external(&u, problem);
    let (mut r, mut cost) = residuals(problem, &params)?;

    let mut damping: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < problem.max_iterations && !converged {
        iterations += 1;
        let j = weighted_internal_jacobian(problem, &params)?;
        let normal = j.transpose() * &j;
        let gradient = j.transpose() * &r;

        let max_diag = (0..np).map(|i| normal[(i, i)]).fold(0.0f64, f64::max);
        if max_diag <= 0.0 || !max_diag.is_finite() {
            return Err(FitError::SingularNormalMatrix);
        }
        let lambda = damping.get_or_insert(DAMPING_INIT_FRAC * max_diag);

        // inner loop: grow damping until a step is accepted
        let mut accepted = false;
        for _ in 0..60 {
            let mut lhs = normal.clone();
            for i in 0..np {
                lhs[(i, i)] += *lambda;
            }
            let step = match lhs.lu().solve(&gradient) {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => return Err(FitError::SingularNormalMatrix),
            };
            let u_trial = &u + &step;
            let params_trial = to_external(&u_trial, problem);
            match residuals(problem, &params_trial) {
                Ok((r_trial, cost_trial)) if cost_trial <= cost => {
                    let rel_decrease = if cost > 0.0 {
                        (cost - cost_trial) / cost
                    } else {
                        0.0
                    };
                    u = u_trial;
                    params = params_trial;
                    r = r_trial;
                    cost = cost_trial;
                    *lambda /= DAMPING_DOWN;
                    accepted = true;
                    if rel_decrease < problem.cost_tolerance {
                        converged = true;
                    }
                    break;
                }
                _ => {
                    *lambda *= DAMPING_UP;
                }
            }
        }
        if !accepted {
            // stalled: no downhill step found at any damping — at a minimum
            converged = true;
        }
    }

    // covariance from the undamped normal matrix at the optimum
    let j = weighted_internal_jacobian(problem, &params)?;
    let normal = j.transpose() * &j;
    let cov_internal = normal
        .clone()
        .try_inverse()
        .ok_or(FitError::SingularNormalMatrix)?;

    let dof = problem.x.len().saturating_sub(np).max(1);
    let reduced_chi_square = cost / dof as f64;
    // without measurement errors, scale covariance by reduced chi-square
    let cov_scale = if problem.y_err.is_some() {
        1.0
    } else {
        reduced_chi_square
    };

    // back to external coordinates: cov_p = D cov_u D with D = dp/du
    let mut covariance = vec![0.0; np * np];
    let mut sigmas = vec![0.0; np];
    let d: Vec<f64> = (0..np)
        .map(|i| match problem.scale_of(i) {
            ParamScale::Linear => 1.0,
            ParamScale::LogPositive => params[i],
        })
        .collect();
    for i in 0..np {
        for k in 0..np {
            covariance[i * np + k] = cov_internal[(i, k)] * d[i] * d[k] * cov_scale;
        }
        sigmas[i] = covariance[i * np + i].max(0.0).sqrt();
    }

    Ok(FitResult {
        estimates: params,
        sigmas,
        covariance,
        residual_norm: cost.sqrt(),
        reduced_chi_square,
        converged,
        iterations,
        n_points: problem.x.len(),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct ExpDecay;

    impl FitModel for ExpDecay {
        fn eval(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
            x.iter().map(|&xi| p[0] * (-p[1] * xi).exp()).collect()
        }

        fn jacobian(&self, p: &[f64], x: &[f64]) -> Option<DMatrix<f64>> {
            let mut j = DMatrix::zeros(x.len(), 2);
            for (i, &xi) in x.iter().enumerate() {
                let e = (-p[1] * xi).exp();
                j[(i, 0)] = e;
                j[(i, 1)] = -p[0] * xi * e;
            }
            Some(j)
        }
    }

    fn grid(n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn line_through_exact_points() {
        let x = grid(10, 0.0, 9.0);
        let y: Vec<f64> = x.iter().map(|&xi| 2.5 - 0.75 * xi).collect();
        let problem = FitProblem::new(&LinearModel, &x, &y, None, vec![0.0, 0.0]);
        let fit = least_squares(&problem).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.estimates[0], 2.5, max_relative = 1e-12);
        assert_relative_eq!(fit.estimates[1], -0.75, max_relative = 1e-12);
        assert!(fit.residual_norm < 1e-10);
    }

    #[test]
    fn exponential_recovery_noiseless() {
        let x = grid(40, 0.0, 5.0);
        let truth = [3.0, 0.8];
        let y = ExpDecay.eval(&truth, &x);
        let problem = FitProblem::new(&ExpDecay, &x, &y, None, vec![1.0, 0.3])
            .with_scales(vec![ParamScale::LogPositive, ParamScale::LogPositive]);
        let fit = least_squares(&problem).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.estimates[0], truth[0], max_relative = 1e-8);
        assert_relative_eq!(fit.estimates[1], truth[1], max_relative = 1e-8);
    }

    #[test]
    fn misfit_flags_large_reduced_chi_square() {
        // quadratic data fitted by a straight line with claimed unit errors
        let x = grid(30, -3.0, 3.0);
        let y: Vec<f64> = x.iter().map(|&xi| 10.0 * xi * xi).collect();
        let err = vec![1.0; x.len()];
        let problem = FitProblem::new(&LinearModel, &x, &y, Some(&err), vec![0.0, 0.0]);
        let fit = least_squares(&problem).unwrap();
        assert!(fit.converged);
        assert!(fit.reduced_chi_square > 10.0);
    }

    #[test]
    fn numeric_jacobian_linear_model_exact() {
        let x = grid(7, 0.0, 6.0);
        let j = numeric_jacobian(&LinearModel, &[1.0, 2.0], &x).unwrap();
        let ja = LinearModel.jacobian(&[1.0, 2.0], &x).unwrap();
        for i in 0..x.len() {
            for k in 0..2 {
                assert!((j[(i, k)] - ja[(i, k)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn numeric_vs_analytic_jacobian_exponential() {
        let x = grid(15, 0.0, 4.0);
        let p = [2.2, 1.3];
        let jn = numeric_jacobian(&ExpDecay, &p, &x).unwrap();
        let ja = ExpDecay.jacobian(&p, &x).unwrap();
        let scale = ja.amax();
        for i in 0..x.len() {
            for k in 0..2 {
                assert!((jn[(i, k)] - ja[(i, k)]).abs() < 1e-6 * scale);
            }
        }
    }

    #[test]
    fn zero_sensitivity_parameter_gives_zero_column() {
        let model = |p: &[f64], x: &[f64]| -> Vec<f64> {
            x.iter().map(|&xi| p[0] * xi + 0.0 * p[1]).collect()
        };
        let x = grid(5, 0.0, 4.0);
        let j = numeric_jacobian(&model, &[1.0, 5.0], &x).unwrap();
        for i in 0..x.len() {
            assert_eq!(j[(i, 1)], 0.0);
        }
    }

    #[test]
    fn singular_normal_matrix_is_reported() {
        // two perfectly degenerate parameters
        let model =
            |p: &[f64], x: &[f64]| -> Vec<f64> { x.iter().map(|&xi| (p[0] + p[1]) * xi).collect() };
        let x = grid(6, 0.0, 5.0);
        let y: Vec<f64> = x.iter().map(|&xi| 2.0 * xi).collect();
        let problem = FitProblem::new(&model, &x, &y, None, vec![1.0, 1.0]);
        assert!(matches!(
            least_squares(&problem),
            Err(FitError::SingularNormalMatrix)
        ));
    }

    #[test]
    fn covariance_scales_with_parameter_rescaling() {
        // model B is model A with the first parameter divided by 100
        let x = grid(25, 0.0, 5.0);
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| 3.0 * (-0.9 * xi).exp() + 0.01 * ((i % 5) as f64 - 2.0))
            .collect();
        let model_a = ExpDecay;
        let model_b = |p: &[f64], x: &[f64]| -> Vec<f64> {
            x.iter()
                .map(|&xi| (100.0 * p[0]) * (-p[1] * xi).exp())
                .collect()
        };
        let fit_a =
            least_squares(&FitProblem::new(&model_a, &x, &y, None, vec![2.0, 1.0])).unwrap();
        let fit_b =
            least_squares(&FitProblem::new(&model_b, &x, &y, None, vec![0.02, 1.0])).unwrap();
        assert_relative_eq!(fit_b.sigmas[0] * 100.0, fit_a.sigmas[0], max_relative = 1e-4);
        assert_relative_eq!(
            fit_b.correlation(0, 1),
            fit_a.correlation(0, 1),
            max_relative = 1e-4
        );
    }

    #[test]
    fn identical_problems_are_bit_identical() {
        let x = grid(20, 0.0, 5.0);
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| 2.0 * (-1.1 * xi).exp() + 1e-3 * xi.sin())
            .collect();
        let run = || {
            least_squares(&FitProblem::new(&ExpDecay, &x, &y, None, vec![1.0, 0.5])).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.sigmas, b.sigmas);
        assert_eq!(a.covariance, b.covariance);
    }
}
