//! Closed-form model library. Times are in μs, frequencies in MHz (so
//! phases are 2π·f·τ), powers in nW and rates in μs⁻¹.

use std::f64::consts::TAU;
use std::fmt;

use super::{Bound, FitError, FitModel, ParamSpec};
use crate::device::DeviceParams;

type Kernel = Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A model given by a pointwise formula f(p, x).
pub struct ClosedForm {
    name: String,
    specs: Vec<ParamSpec>,
    dim: usize,
    f: Kernel,
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForm").field("name", &self.name).field("specs", &self.specs).finish()
    }
}

impl ClosedForm {
    pub fn new<F>(name: impl Into<String>, specs: Vec<ParamSpec>, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), specs, dim: 1, f: Box::new(move |p, x| f(p, x[0])) }
    }

    pub fn new_multi<F>(name: impl Into<String>, specs: Vec<ParamSpec>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), specs, dim, f: Box::new(f) }
    }

    /// Replaces one initial guess.
    pub fn with_initial(mut self, name: &str, value: f64) -> Self {
        if let Some(s) = self.specs.iter_mut().find(|s| s.name == name) {
            s.initial = value;
        }
        self
    }

    pub fn with_initials(mut self, values: &[f64]) -> Self {
        for (s, &v) in self.specs.iter_mut().zip(values) {
            s.initial = v;
        }
        self
    }

    /// Evaluates at a single point.
    pub fn at(&self, p: &[f64], x: &[f64]) -> f64 {
        (self.f)(p, x)
    }
}

impl FitModel for ClosedForm {
    fn name(&self) -> &str {
        &self.name
    }

    fn params(&self) -> Vec<ParamSpec> {
        self.specs.clone()
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, FitError> {
        if params.len() != self.specs.len() {
            return Err(FitError::Shape(format!("{} parameters for {} specs", params.len(), self.specs.len())));
        }
        Ok(x.chunks(self.dim).map(|pt| (self.f)(params, pt)).collect())
    }
}

/// y = a·x + b.
pub fn linear() -> ClosedForm {
    ClosedForm::new("linear", vec![ParamSpec::free("a", 1.0), ParamSpec::free("b", 0.0)], |p, x| p[0] * x + p[1])
}

fn lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
    let z = 2.0 * (x - center) / fwhm;
    1.0 / (1.0 + z * z)
}

/// Two Lorentzians with full widths at half maximum plus an offset.
pub fn lorentzian_pair() -> ClosedForm {
    ClosedForm::new(
        "lorentzian-pair",
        vec![
            ParamSpec::free("center1", -1.0),
            ParamSpec::free("center2", 1.0),
            ParamSpec::positive("width1", 1.0),
            ParamSpec::positive("width2", 1.0),
            ParamSpec::free("amp1", 1.0),
            ParamSpec::free("amp2", 1.0),
            ParamSpec::free("offset", 0.0),
        ],
        |p, x| p[6] + p[4] * lorentzian(x, p[0], p[2]) + p[5] * lorentzian(x, p[1], p[3]),
    )
}

/// a·exp(−(τ/T2*)²)·sin(2πfτ + α) + c.
pub fn ramsey_decay() -> ClosedForm {
    ClosedForm::new(
        "ramsey",
        vec![
            ParamSpec::free("amp", 0.5),
            ParamSpec::positive("t2_star", 1.0),
            ParamSpec::positive("freq", 5.0),
            ParamSpec::free("phase", 0.0),
            ParamSpec::free("offset", 0.5),
        ],
        |p, t| p[0] * (-(t / p[1]).powi(2)).exp() * (TAU * p[2] * t + p[3]).sin() + p[4],
    )
}

/// v₀·exp(−(τ/T2)ⁿ) + v∞ with n ∈ [0.3, 6].
pub fn stretched_exp() -> ClosedForm {
    ClosedForm::new(
        "stretched-exp",
        vec![
            ParamSpec::free("v0", 0.3),
            ParamSpec::positive("t2", 30.0),
            ParamSpec::new("n", 2.0, Bound::Interval(0.3, 6.0)),
            ParamSpec::free("v_inf", 0.0),
        ],
        |p, t| p[0] * (-(t / p[1]).powf(p[2])).exp() + p[3],
    )
}

/// a·cos φ + b.
pub fn cosine() -> ClosedForm {
    ClosedForm::new("cosine", vec![ParamSpec::free("a", 0.25), ParamSpec::free("b", 0.25)], |p, phi| p[0] * phi.cos() + p[1])
}

/// a·exp(−t/τ) + c.
pub fn exp_decay() -> ClosedForm {
    ClosedForm::new("exp-decay", vec![ParamSpec::free("a", 1.0), ParamSpec::positive("tau", 1.0), ParamSpec::free("c", 0.0)], |p, t| {
        p[0] * (-t / p[1]).exp() + p[2]
    })
}

/// Pumping rate (μs⁻¹) vs power: (Γ/2)·s/(1+s)/η with s = p/p_sat and Γ
/// fixed at `gamma_mhz`.
pub fn init_saturation(gamma_mhz: f64) -> ClosedForm {
    let gamma = TAU * gamma_mhz;
    ClosedForm::new("init-saturation", vec![ParamSpec::positive("p_sat", 5.0), ParamSpec::positive("eta", 50.0)], move |p, power| {
        let s = power / p[0];
        gamma / 2.0 * s / (1.0 + s) / p[1]
    })
}

/// 0.5·(1 − exp(−τ/T1)).
pub fn t1_recovery() -> ClosedForm {
    ClosedForm::new("t1-recovery", vec![ParamSpec::positive("t1", 1.0)], |p, t| 0.5 * (1.0 - (-t / p[0]).exp()))
}

/// Two-dimensional Ramsey map in (τ, δ):
///
/// c₀/(1+(δ/c₁)²)·e^{−(τ/T2*)²}·(cos(ω_R τ + 2δT_{π/2}) + 1) + c₂/(1+(δ/c₁)²)
///
/// with ω_R = 2π(f_S + δ + Δ_AC). T2*, T_{π/2} and f_S are fixed.
pub fn ramsey_2d(t2_star_us: f64, t_pi2_us: f64, serrodyne_mhz: f64) -> ClosedForm {
    ClosedForm::new_multi(
        "ramsey-2d",
        vec![ParamSpec::free("ac_stark", 3.0), ParamSpec::free("c0", 0.25), ParamSpec::positive("c1", 10.0), ParamSpec::free("c2", 0.25)],
        2,
        move |p, x| ramsey_2d_value(p, x[0], x[1], t2_star_us, t_pi2_us, serrodyne_mhz),
    )
}

/// Point evaluation of [`ramsey_2d`] with parameters (Δ_AC, c₀, c₁, c₂).
pub fn ramsey_2d_value(p: &[f64], tau: f64, delta: f64, t2_star: f64, t_pi2: f64, serrodyne: f64) -> f64 {
    let lorentz = 1.0 / (1.0 + (delta / p[2]).powi(2));
    let omega = TAU * (serrodyne + delta + p[0]);
    let phase = omega * tau + 2.0 * TAU * delta * t_pi2;
    p[1] * lorentz * (-(tau / t2_star).powi(2)).exp() * (phase.cos() + 1.0) + p[3] * lorentz
}

/// Names accepted by [`from_name`].
pub const NAMES: [&str; 9] =
    ["linear", "lorentzian-pair", "ramsey", "stretched-exp", "cosine", "exp-decay", "init-saturation", "t1-recovery", "ramsey-2d"];

/// Library lookup; fixed constants come from `dev` (and the Ramsey pulse
/// settings for `ramsey-2d`).
pub fn from_name(name: &str, dev: &DeviceParams, t_pi2_us: f64, serrodyne_mhz: f64) -> Result<ClosedForm, FitError> {
    Ok(match name {
        "linear" => linear(),
        "lorentzian-pair" => lorentzian_pair(),
        "ramsey" => ramsey_decay(),
        "stretched-exp" => stretched_exp(),
        "cosine" => cosine(),
        "exp-decay" => exp_decay(),
        "init-saturation" => init_saturation(dev.gamma_mhz),
        "t1-recovery" => t1_recovery(),
        "ramsey-2d" => ramsey_2d(dev.t2_star_us, t_pi2_us, serrodyne_mhz),
        other => return Err(FitError::UnknownModel(other.to_string())),
    })
}
