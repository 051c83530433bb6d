//! Fits with data-driven starting points, used to analyse scans.

use std::f64::consts::TAU;

use super::models::{cosine, lorentzian_pair, ramsey_decay, stretched_exp};
use super::{least_squares, Dataset, FitError, FitModel, FitResult, ParamSpec};
use crate::protocols::{run_rabi, QubitContext, RabiConfig};
use crate::units;

fn dataset(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Dataset {
    let d = Dataset::new(x.to_vec(), y.to_vec());
    match sigma {
        Some(s) => d.with_sigma(s.to_vec()),
        None => d,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorentzianPair {
    pub fit: FitResult,
    /// |center₂ − center₁|.
    pub splitting: f64,
    pub splitting_err: f64,
    /// Mean of the two FWHM.
    pub average_width: f64,
    pub average_width_err: f64,
}

/// Two-peak fit started from the two largest well-separated maxima.
pub fn fit_lorentzian_pair(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<LorentzianPair, FitError> {
    if x.len() != y.len() {
        return Err(FitError::Shape(format!("{} x values for {} y values", x.len(), y.len())));
    }
    if x.len() < 7 {
        return Err(FitError::TooFewPoints { points: x.len(), params: 7 });
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let offset = sorted[sorted.len() / 4];
    let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);

    let i1 = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(0);
    let amp1 = y[i1] - offset;
    // Width guess: distance to where the first peak halves.
    let half = offset + amp1 / 2.0;
    let mut j = i1;
    while j + 1 < y.len() && y[j] > half {
        j += 1;
    }
    let width = (2.0 * (x[j] - x[i1]).abs()).max(span / x.len() as f64 * 2.0);
    let i2 = (0..y.len()).filter(|&k| (x[k] - x[i1]).abs() > 2.0 * width).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(if i1 == 0 {
        y.len() - 1
    } else {
        0
    });
    let (c1, c2, a1, a2) = if x[i1] < x[i2] { (x[i1], x[i2], amp1, y[i2] - offset) } else { (x[i2], x[i1], y[i2] - offset, amp1) };
    let model = lorentzian_pair().with_initials(&[c1, c2, width, width, a1, a2, offset]);
    let fit = least_squares(&model, &dataset(x, y, sigma))?;
    let cov = &fit.covariance;
    let splitting = (fit.values[1] - fit.values[0]).abs();
    let splitting_err = (cov[(0, 0)] + cov[(1, 1)] - 2.0 * cov[(0, 1)]).max(0.0).sqrt();
    let average_width = 0.5 * (fit.values[2] + fit.values[3]);
    let average_width_err = 0.5 * (cov[(2, 2)] + cov[(3, 3)] + 2.0 * cov[(2, 3)]).max(0.0).sqrt();
    Ok(LorentzianPair { fit, splitting, splitting_err, average_width, average_width_err })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    /// a/b.
    pub value: f64,
    /// Propagated 1σ error of a/b.
    pub error: f64,
    pub amplitude: f64,
    pub offset: f64,
}

/// Fits a·cos φ + b and returns a/b. The model is linear, so the fit starts
/// from the exact least-squares projection.
pub fn extract_visibility(phi: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<Visibility, FitError> {
    if phi.len() != y.len() {
        return Err(FitError::Shape(format!("{} phases for {} values", phi.len(), y.len())));
    }
    let n = phi.len() as f64;
    let b0 = y.iter().sum::<f64>() / n;
    let cc: f64 = phi.iter().map(|p| p.cos().powi(2)).sum();
    let a0 = if cc > 0.0 { phi.iter().zip(y).map(|(p, v)| p.cos() * (v - b0)).sum::<f64>() / cc } else { 0.0 };
    let model = cosine().with_initials(&[a0, b0]);
    let fit = least_squares(&model, &dataset(phi, y, sigma))?;
    let (a, b) = (fit.values[0], fit.values[1]);
    if b == 0.0 {
        return Err(FitError::Model("offset b vanished; visibility undefined".into()));
    }
    let c = &fit.covariance;
    let var = c[(0, 0)] / (b * b) + a * a * c[(1, 1)] / b.powi(4) - 2.0 * a * c[(0, 1)] / b.powi(3);
    Ok(Visibility { value: a / b, error: var.max(0.0).sqrt(), amplitude: a, offset: b })
}

/// a·exp(−(τ/T2*)²)·sin(2πfτ + α) + c, started from a periodogram peak and
/// a coarse T2* search with the linear parameters solved exactly.
pub fn fit_ramsey_trace(tau: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<FitResult, FitError> {
    if tau.len() != y.len() {
        return Err(FitError::Shape(format!("{} delays for {} values", tau.len(), y.len())));
    }
    if tau.len() < 5 {
        return Err(FitError::TooFewPoints { points: tau.len(), params: 5 });
    }
    let n = tau.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let t_span = tau[n - 1] - tau[0];
    let dt = t_span / (n - 1) as f64;
    let f_max = 0.5 / dt;
    let steps = 4 * n;
    let power = |f: f64| {
        let (mut s, mut c) = (0.0, 0.0);
        for (t, v) in tau.iter().zip(y) {
            s += (v - mean) * (TAU * f * t).sin();
            c += (v - mean) * (TAU * f * t).cos();
        }
        s * s + c * c
    };
    let f0 = (1..=steps).map(|k| f_max * k as f64 / steps as f64).max_by(|a, b| power(*a).total_cmp(&power(*b))).unwrap_or(1.0 / t_span);

    // For each envelope guess, solve [e·sin, e·cos, 1] by least squares.
    let mut best = (f64::INFINITY, [0.0; 5]);
    for k in 1..=12 {
        let t2 = t_span * k as f64 / 8.0;
        let cols: Vec<[f64; 3]> = tau
            .iter()
            .map(|&t| {
                let e = (-(t / t2).powi(2)).exp();
                [e * (TAU * f0 * t).sin(), e * (TAU * f0 * t).cos(), 1.0]
            })
            .collect();
        let a = nalgebra::DMatrix::from_fn(n, 3, |i, j| cols[i][j]);
        let b = nalgebra::DVector::from_column_slice(y);
        let Ok(sol) = a.clone().svd(true, true).solve(&b, 1e-12) else { continue };
        let cost = (a * &sol - b).norm_squared();
        if cost < best.0 {
            let amp = sol[0].hypot(sol[1]);
            let phase = sol[1].atan2(sol[0]);
            best = (cost, [amp, t2, f0, phase, sol[2]]);
        }
    }
    let model = ramsey_decay().with_initials(&best.1);
    least_squares(&model, &dataset(tau, y, sigma))
}

/// v₀·exp(−(τ/T2)ⁿ) + v∞ started from the half-decay point.
pub fn fit_decay_trace(tau: &[f64], v: &[f64], sigma: Option<&[f64]>) -> Result<FitResult, FitError> {
    if tau.len() != v.len() || tau.is_empty() {
        return Err(FitError::Shape(format!("{} delays for {} values", tau.len(), v.len())));
    }
    let v_inf = v[v.len() - 1].min(v[0]);
    let v0 = v[0] - v_inf;
    let half = v_inf + v0 / 2.0;
    let t_half = tau.iter().zip(v).find(|(_, &y)| y < half).map_or(tau[tau.len() - 1], |(t, _)| *t).max(1e-12);
    // exp(−(t½/T2)ⁿ) = ½ at n = 2.
    let t2 = t_half / std::f64::consts::LN_2.sqrt();
    let model = stretched_exp().with_initials(&[v0, t2, 2.0, v_inf]);
    least_squares(&model, &dataset(tau, v, sigma))
}

/// Fit-through-simulation of a Rabi trace: Ω/2π (MHz), γ₁ and γ₂ (μs⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct RabiFitConfig {
    pub rabi: RabiConfig,
    /// Device, noise and initialization used by the simulator; its γ₁, Ω
    /// and Γ_os are replaced by the candidate parameters.
    pub context: QubitContext,
    pub initial_rabi_mhz: f64,
    pub initial_gamma1_per_us: f64,
    pub initial_gamma2_per_us: f64,
}

impl RabiFitConfig {
    pub fn new(context: QubitContext) -> Self {
        Self { rabi: RabiConfig::default(), context, initial_rabi_mhz: 3.0, initial_gamma1_per_us: 0.05, initial_gamma2_per_us: 3.0 }
    }
}

struct RabiMaster<'a> {
    cfg: &'a RabiFitConfig,
}

impl FitModel for RabiMaster<'_> {
    fn name(&self) -> &str {
        "rabi-master"
    }

    fn params(&self) -> Vec<ParamSpec> {
        vec![
            ParamSpec::positive("rabi", self.cfg.initial_rabi_mhz),
            ParamSpec::positive("gamma1", self.cfg.initial_gamma1_per_us),
            ParamSpec::positive("gamma2", self.cfg.initial_gamma2_per_us),
        ]
    }

    fn eval(&self, p: &[f64], x: &[f64]) -> Result<Vec<f64>, FitError> {
        let mut ctx = self.cfg.context.clone();
        ctx.calibration.rabi_mhz = Some(p[0]);
        ctx.calibration.gamma_os_per_us = Some(p[2]);
        ctx.calibration.optical_scattering = true;
        ctx.noise.gamma1 = units::per_us(p[1]);
        run_rabi(x, &self.cfg.rabi, &ctx).map(|s| s.values).map_err(|e| FitError::Model(e.to_string()))
    }
}

/// Fits Ω, γ₁ and γ₂ by running the Rabi simulator for every candidate.
pub fn fit_rabi_master(t_us: &[f64], y: &[f64], sigma: Option<&[f64]>, cfg: &RabiFitConfig) -> Result<FitResult, FitError> {
    least_squares(&RabiMaster { cfg }, &dataset(t_us, y, sigma))
}
