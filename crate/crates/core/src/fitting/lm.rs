//! Levenberg-Marquardt with a forward-difference Jacobian.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use super::{Dataset, FitError, FitModel, FitResult, ParamSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub ftol: f64,
    /// Stop when the step norm falls below this (internal coordinates).
    pub xtol: f64,
    pub initial_lambda: f64,
    /// Replaces the initial guess of the named parameters.
    pub overrides: Vec<(String, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 500, ftol: 1e-10, xtol: 1e-12, initial_lambda: 1e-3, overrides: Vec::new() }
    }
}

pub fn least_squares(model: &dyn FitModel, data: &Dataset) -> Result<FitResult, FitError> {
    least_squares_with(model, data, &FitOptions::default())
}

struct Problem<'a> {
    model: &'a dyn FitModel,
    data: &'a Dataset,
    specs: Vec<ParamSpec>,
    weights: Vec<f64>,
}

impl Problem<'_> {
    fn external(&self, u: &[f64]) -> Vec<f64> {
        self.specs.iter().zip(u).map(|(s, &v)| s.bound.to_external(v)).collect()
    }

    /// Weighted residuals (y − f)/σ at natural parameters `p`.
    fn residuals_at(&self, p: &[f64]) -> Result<Vec<f64>, FitError> {
        let f = self.model.eval(p, &self.data.x)?;
        if f.len() != self.data.len() {
            return Err(FitError::Shape(format!("model returned {} values for {} points", f.len(), self.data.len())));
        }
        Ok(self.data.y.iter().zip(&f).zip(&self.weights).map(|((y, f), w)| (y - f) * w).collect())
    }

    fn residuals(&self, u: &[f64]) -> Result<Vec<f64>, FitError> {
        self.residuals_at(&self.external(u))
    }

    /// Forward differences with h = max(1e-8, 1e-6|x|) around `x`, using
    /// `eval` to map coordinates to residuals.
    fn jacobian<F>(&self, x: &[f64], r0: &[f64], eval: F) -> Result<DMatrix<f64>, FitError>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, FitError> + Sync,
    {
        let m = r0.len();
        let columns: Vec<Vec<f64>> = (0..x.len())
            .into_par_iter()
            .map(|j| {
                let h = (1e-6 * x[j].abs()).max(1e-8);
                let mut xp = x.to_vec();
                xp[j] += h;
                let r = eval(&xp)?;
                Ok(r.iter().zip(r0).map(|(a, b)| (a - b) / h).collect())
            })
            .collect::<Result<_, FitError>>()?;
        Ok(DMatrix::from_fn(m, x.len(), |i, j| columns[j][i]))
    }
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

pub fn least_squares_with(model: &dyn FitModel, data: &Dataset, opts: &FitOptions) -> Result<FitResult, FitError> {
    data.validate(model.input_dim())?;
    let mut specs = model.params();
    for (name, value) in &opts.overrides {
        let param = specs.iter_mut().find(|s| &s.name == name).ok_or_else(|| FitError::UnknownParameter(name.clone()))?;
        param.initial = *value;
    }
    for s in &specs {
        s.validate()?;
    }
    let n = specs.len();
    let m = data.len();
    if m < n {
        return Err(FitError::TooFewPoints { points: m, params: n });
    }
    let weights = match &data.sigma {
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; m],
    };
    let prob = Problem { model, data, specs, weights };

    let mut u: Vec<f64> = prob.specs.iter().map(|s| s.bound.to_internal(s.initial)).collect();
    let mut r = prob.residuals(&u)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteModel);
    }
    let mut c = cost(&r);
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < opts.max_iter {
        iterations += 1;
        if c == 0.0 {
            converged = true;
            break;
        }
        let jac = prob.jacobian(&u, &r, |v| prob.residuals(v))?;
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let diag_floor = a.diagonal().max() * 1e-15 + f64::MIN_POSITIVE;

        loop {
            let mut damped = a.clone();
            for k in 0..n {
                damped[(k, k)] += lambda * a[(k, k)].max(diag_floor);
            }
            let step = damped.cholesky().map(|ch| -ch.solve(&g));
            let Some(step) = step else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    converged = true;
                    break 'outer;
                }
                continue;
            };
            let u_new: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial = prob.residuals(&u_new).ok().filter(|rn| rn.iter().all(|v| v.is_finite()));
            let c_new = trial.as_deref().map_or(f64::INFINITY, cost);
            if c_new < c {
                let rel = (c - c_new) / c;
                let unorm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let small_step = step.norm() < opts.xtol * (unorm + opts.xtol);
                u = u_new;
                r = trial.unwrap_or_default();
                c = c_new;
                lambda = (lambda / 10.0).max(1e-15);
                if rel < opts.ftol || small_step || c == 0.0 {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                // No descent direction left at working precision.
                converged = true;
                break 'outer;
            }
        }
    }

    let p = prob.external(&u);
    let names: Vec<String> = prob.specs.iter().map(|s| s.name.clone()).collect();
    let dof = m.saturating_sub(n);
    let reduced_chi2 = if dof > 0 { 2.0 * c / dof as f64 } else { 0.0 };

    let jp = prob.jacobian(&p, &r, |v| prob.residuals_at(v))?;
    let covariance = covariance(&jp, reduced_chi2, &names)?;
    let uncertainties = (0..n).map(|k| covariance[(k, k)].max(0.0).sqrt()).collect();
    let fitted = model.eval(&p, &data.x)?;
    let residuals = data.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();

    Ok(FitResult {
        model: model.name().to_string(),
        names,
        values: p,
        uncertainties,
        covariance,
        reduced_chi2,
        residuals,
        converged,
        iterations,
    })
}

/// s²(JᵀJ)⁻¹ after checking the column-scaled normal matrix for
/// near-singular directions.
fn covariance(jac: &DMatrix<f64>, s2: f64, names: &[String]) -> Result<DMatrix<f64>, FitError> {
    let n = jac.ncols();
    let a = jac.transpose() * jac;
    let scale: Vec<f64> = (0..n).map(|k| a[(k, k)].sqrt()).collect();
    if let Some(k) = scale.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(FitError::Singular { direction: names[k].clone() });
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (scale[i] * scale[j]));
    let eig = SymmetricEigen::new(scaled.clone());
    let (kmin, &lmin) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap_or((0, &0.0));
    let lmax = eig.eigenvalues.max();
    if !(lmin > 1e-12 * lmax) {
        let v = eig.eigenvectors.column(kmin);
        let direction = (0..n).filter(|&k| v[k].abs() > 0.1).map(|k| format!("{:+.2}*{}", v[k], names[k])).collect::<Vec<_>>().join(" ");
        return Err(FitError::Singular { direction });
    }
    let inv = eig.eigenvectors.clone() * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l)) * eig.eigenvectors.transpose();
    Ok(DMatrix::from_fn(n, n, |i, j| s2 * inv[(i, j)] / (scale[i] * scale[j])))
}

/// Forward- and central-difference Jacobians of the unweighted model in
/// natural coordinates, for consistency checks.
pub fn finite_difference_jacobians(model: &dyn FitModel, params: &[f64], x: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>), FitError> {
    let f0 = model.eval(params, x)?;
    let m = f0.len();
    let n = params.len();
    let mut fwd = DMatrix::zeros(m, n);
    let mut cen = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = (1e-6 * params[j].abs()).max(1e-8);
        let mut pp = params.to_vec();
        pp[j] += h;
        let fp = model.eval(&pp, x)?;
        let mut half_p = params.to_vec();
        half_p[j] += h / 2.0;
        let mut half_m = params.to_vec();
        half_m[j] -= h / 2.0;
        let hp = model.eval(&half_p, x)?;
        let hm = model.eval(&half_m, x)?;
        for i in 0..m {
            fwd[(i, j)] = (fp[i] - f0[i]) / h;
            cen[(i, j)] = (hp[i] - hm[i]) / h;
        }
    }
    Ok((fwd, cen))
}
