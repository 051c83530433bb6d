//! Nonlinear least squares and the model library used to analyse scans.
//!
//! Parameters live in a transformed space while the optimiser runs: free
//! parameters are untouched, positive-only parameters are fitted as log p
//! and interval-bounded parameters through a logistic map. Reported values,
//! uncertainties and covariances are always in the natural parameters.

mod analysis;
mod lm;
pub mod models;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

pub use analysis::{
    extract_visibility, fit_decay_trace, fit_lorentzian_pair, fit_rabi_master, fit_ramsey_trace, LorentzianPair, RabiFitConfig, Visibility,
};
pub use lm::{finite_difference_jacobians, least_squares, least_squares_with, FitOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {params} data points, got {points}")]
    TooFewPoints { points: usize, params: usize },

    #[error("initial value of `{name}` is invalid: {reason}")]
    BadInitial { name: String, reason: String },

    #[error("data shape mismatch: {0}")]
    Shape(String),

    #[error("model produced a non-finite value at the initial guess")]
    NonFiniteModel,

    #[error("model evaluation failed: {0}")]
    Model(String),

    #[error("normal equations are singular; unidentifiable direction: {direction}")]
    Singular { direction: String },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Free,
    /// p > 0, fitted as ln p.
    Positive,
    /// lo < p < hi, fitted through a logistic map.
    Interval(f64, f64),
}

impl Bound {
    pub fn to_internal(self, p: f64) -> f64 {
        match self {
            Bound::Free => p,
            Bound::Positive => p.ln(),
            Bound::Interval(lo, hi) => {
                let z = (p - lo) / (hi - lo);
                (z / (1.0 - z)).ln()
            }
        }
    }

    pub fn to_external(self, u: f64) -> f64 {
        match self {
            Bound::Free => u,
            Bound::Positive => u.exp(),
            Bound::Interval(lo, hi) => lo + (hi - lo) / (1.0 + (-u).exp()),
        }
    }

    /// dp/du.
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Bound::Free => 1.0,
            Bound::Positive => u.exp(),
            Bound::Interval(lo, hi) => {
                let s = 1.0 / (1.0 + (-u).exp());
                (hi - lo) * s * (1.0 - s)
            }
        }
    }

    fn admits(self, p: f64) -> bool {
        match self {
            Bound::Free => p.is_finite(),
            Bound::Positive => p.is_finite() && p > 0.0,
            Bound::Interval(lo, hi) => p > lo && p < hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub initial: f64,
    pub bound: Bound,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, initial: f64, bound: Bound) -> Self {
        Self { name: name.into(), initial, bound }
    }

    pub fn free(name: impl Into<String>, initial: f64) -> Self {
        Self::new(name, initial, Bound::Free)
    }

    pub fn positive(name: impl Into<String>, initial: f64) -> Self {
        Self::new(name, initial, Bound::Positive)
    }

    pub(crate) fn validate(&self) -> Result<(), FitError> {
        if self.bound.admits(self.initial) {
            Ok(())
        } else {
            Err(FitError::BadInitial { name: self.name.clone(), reason: format!("{} violates {:?}", self.initial, self.bound) })
        }
    }
}

/// Observations y(x) with optional per-point standard deviations. `x` is
/// stored flat with `dim` coordinates per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub dim: usize,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, dim: 1, y, sigma: None }
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Self {
        self.sigma = Some(sigma);
        self
    }

    /// Points with `dim` coordinates each, flattened point by point.
    pub fn multi(x: Vec<f64>, dim: usize, y: Vec<f64>) -> Self {
        Self { x, dim, y, sigma: None }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn validate(&self, model_dim: usize) -> Result<(), FitError> {
        if self.dim != model_dim {
            return Err(FitError::Shape(format!("model expects {model_dim} coordinates, data has {}", self.dim)));
        }
        if self.x.len() != self.y.len() * self.dim {
            return Err(FitError::Shape(format!("{} x values for {} points", self.x.len(), self.y.len())));
        }
        if let Some(s) = &self.sigma {
            if s.len() != self.y.len() {
                return Err(FitError::Shape(format!("{} sigma values for {} points", s.len(), self.y.len())));
            }
            if s.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(FitError::Shape("sigma values must be finite and positive".into()));
            }
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(FitError::Shape("data contain non-finite values".into()));
        }
        Ok(())
    }
}

/// A parametric model y = f(p; x).
pub trait FitModel: Sync {
    fn name(&self) -> &str;

    fn params(&self) -> Vec<ParamSpec>;

    /// Coordinates per data point.
    fn input_dim(&self) -> usize {
        1
    }

    /// Evaluates the model at every point of `x` (flat, `input_dim` per point).
    fn eval(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, FitError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// 1σ, square roots of the covariance diagonal.
    pub uncertainties: Vec<f64>,
    /// Residual-variance scaled.
    pub covariance: DMatrix<f64>,
    pub reduced_chi2: f64,
    /// y − f(x), unweighted.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.values[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.uncertainties[i])
    }

    /// Value of a parameter known to exist in the model.
    pub fn get(&self, name: &str) -> f64 {
        self.value(name).unwrap_or_else(|| panic!("model `{}` has no parameter `{name}`", self.model))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("model: {}\n", self.model);
        let width = self.names.iter().map(String::len).max().unwrap_or(0);
        for ((n, v), e) in self.names.iter().zip(&self.values).zip(&self.uncertainties) {
            let _ = writeln!(out, "  {n:<width$} = {v:.6e} +/- {e:.2e}");
        }
        let _ = writeln!(out, "reduced chi2: {:.6e}", self.reduced_chi2);
        let _ = writeln!(out, "converged: {} after {} iterations", self.converged, self.iterations);
        out
    }

    /// `key=value` lines; uncertainties under `<name>_err`.
    pub fn to_key_values(&self) -> String {
        let mut out = format!("model={}\n", self.model);
        for ((n, v), e) in self.names.iter().zip(&self.values).zip(&self.uncertainties) {
            let _ = writeln!(out, "{n}={v:.12e}\n{n}_err={e:.12e}");
        }
        let _ = writeln!(out, "reduced_chi2={:.12e}\nconverged={}\niterations={}", self.reduced_chi2, self.converged, self.iterations);
        out
    }
}
