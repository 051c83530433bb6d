//! Classical detuning noise and the hyperfine doubling of the spin line.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sequence::DetuningSource;
use crate::device::DeviceParams;
use crate::error::{ensure_non_negative, Error, Result};
use crate::raman::{self, RamanDriveParams};
use crate::units;

/// Drift-bath time constant (s) reproducing the echo decay at the default
/// device parameters.
pub const DEFAULT_DRIFT_TIME: f64 = 29.4e-6;

/// Leakage power (nW) and its single-photon detuning (MHz).
pub const DEFAULT_LEAK_POWER_NW: f64 = 1.0;
pub const DEFAULT_LEAK_DETUNING_MHZ: f64 = 1200.0;

/// Detuning noise of the spin splitting plus Markovian rates, in SI units.
///
/// Per shot the splitting is offset by δ(t) = δ_qs + κ·t + x(t), with δ_qs
/// drawn from N(0, quasi_static_sigma²), κ from N(0, drift_sigma²) and x an
/// Ornstein-Uhlenbeck process with stationary std `ou_sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// rad/s.
    pub quasi_static_sigma: f64,
    /// rad/s².
    pub drift_sigma: f64,
    /// rad/s.
    pub ou_sigma: f64,
    /// s; infinite means frozen.
    pub ou_tau_c: f64,
    /// σz dephasing rate during delays (s⁻¹).
    pub leak_dephasing: f64,
    /// Intrinsic depolarisation rate (s⁻¹).
    pub gamma1: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { quasi_static_sigma: 0.0, drift_sigma: 0.0, ou_sigma: 0.0, ou_tau_c: f64::INFINITY, leak_dephasing: 0.0, gamma1: 0.0 }
    }

    /// σ = √2/T2*, a linear drift with time constant [`DEFAULT_DRIFT_TIME`]
    /// and leakage dephasing from 1 nW at 1200 MHz.
    pub fn calibrated(dev: &DeviceParams) -> Result<Self> {
        let leak = RamanDriveParams::new(DEFAULT_LEAK_DETUNING_MHZ, DEFAULT_LEAK_POWER_NW);
        Ok(Self {
            quasi_static_sigma: quasi_static_sigma(dev.t2_star_us),
            drift_sigma: drift_sigma(DEFAULT_DRIFT_TIME),
            leak_dephasing: leak_dephasing(&leak, dev)?,
            ..Self::noiseless()
        })
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("quasi_static_sigma", self.quasi_static_sigma)?;
        ensure_non_negative("drift_sigma", self.drift_sigma)?;
        ensure_non_negative("ou_sigma", self.ou_sigma)?;
        ensure_non_negative("leak_dephasing", self.leak_dephasing)?;
        ensure_non_negative("gamma1", self.gamma1)?;
        if !(self.ou_tau_c > 0.0) {
            return Err(Error::InvalidParameter { name: "ou_tau_c", reason: format!("{} must be positive", self.ou_tau_c) });
        }
        Ok(())
    }

    /// True when a shot differs from the quasi-static offset alone.
    pub fn is_dynamic(&self) -> bool {
        self.drift_sigma > 0.0 || self.ou_sigma > 0.0
    }
}

/// Quasi-static std (rad/s) giving a Ramsey envelope exp(−(τ/T2*)²).
pub fn quasi_static_sigma(t2_star_us: f64) -> f64 {
    2f64.sqrt() / units::us(t2_star_us)
}

/// Drift-rate std (rad/s²) giving a Hahn echo envelope exp(−(τ/T)⁴).
pub fn drift_sigma(t: f64) -> f64 {
    32f64.sqrt() / (t * t)
}

/// Γ_os (s⁻¹) of a leaking laser, applied as dephasing during delays.
pub fn leak_dephasing(leak: &RamanDriveParams, dev: &DeviceParams) -> Result<f64> {
    Ok(units::per_us(raman::scattering_rate(leak, dev)?.gamma_os_per_us))
}

/// Classical nuclear spin: a mixture of manifolds shifting the spin
/// splitting by ±A/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuclearSpinModel {
    pub hyperfine_a_mhz: f64,
    /// (p₊, p₋).
    pub populations: (f64, f64),
}

impl NuclearSpinModel {
    pub fn new(hyperfine_a_mhz: f64) -> Self {
        Self { hyperfine_a_mhz, populations: (0.5, 0.5) }
    }

    /// A single manifold at zero shift.
    pub fn none() -> Self {
        Self { hyperfine_a_mhz: 0.0, populations: (1.0, 0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("hyperfine_a", self.hyperfine_a_mhz)?;
        let (p, m) = self.populations;
        if p < 0.0 || m < 0.0 || ((p + m) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter { name: "populations", reason: format!("({p}, {m}) must be nonnegative and sum to 1") });
        }
        Ok(())
    }

    /// (splitting shift in rad/s, weight) for each populated manifold.
    pub fn manifolds(&self) -> Vec<(f64, f64)> {
        let half = units::mhz(self.hyperfine_a_mhz / 2.0);
        [(half, self.populations.0), (-half, self.populations.1)].into_iter().filter(|&(_, w)| w > 0.0).collect()
    }
}

/// Exact update of an OU process x and its integral over `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuProcess {
    pub sigma: f64,
    pub tau_c: f64,
    pub x: f64,
}

impl OuProcess {
    pub fn stationary<R: Rng + ?Sized>(sigma: f64, tau_c: f64, rng: &mut R) -> Self {
        let z: f64 = StandardNormal.sample(rng);
        Self { sigma, tau_c, x: sigma * z }
    }

    /// Advances by `dt` and returns ∫x dt over the step.
    pub fn step<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> f64 {
        if dt <= 0.0 || self.sigma == 0.0 {
            return self.x * dt.max(0.0);
        }
        let (s2, tau) = (self.sigma * self.sigma, self.tau_c);
        if !tau.is_finite() {
            return self.x * dt;
        }
        let r = dt / tau;
        let e1 = (-r).exp();
        let e2 = (-2.0 * r).exp();
        let mu_x = self.x * e1;
        let mu_i = self.x * tau * (1.0 - e1);
        let var_x = s2 * (1.0 - e2);
        let var_i = s2 * tau * tau * (2.0 * r - 3.0 + 4.0 * e1 - e2);
        let cov = s2 * tau * (1.0 - e1).powi(2);

        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let sx = var_x.sqrt();
        let (a, b) = if sx > 0.0 {
            let a = cov / sx;
            (a, (var_i - a * a).max(0.0).sqrt())
        } else {
            (0.0, var_i.max(0.0).sqrt())
        };
        self.x = mu_x + sx * z1;
        mu_i + a * z1 + b * z2
    }
}

/// One shot's detuning trajectory, consumed segment by segment.
pub struct ShotNoise<'a, R: Rng + ?Sized> {
    offset: f64,
    drift_rate: f64,
    ou: Option<OuProcess>,
    t: f64,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> ShotNoise<'a, R> {
    /// Draws every component, including the quasi-static offset.
    pub fn sample(model: &NoiseModel, rng: &'a mut R) -> Self {
        let z: f64 = StandardNormal.sample(rng);
        Self::with_offset(model, model.quasi_static_sigma * z, rng)
    }

    /// Uses `offset` for the quasi-static part and draws the rest.
    pub fn with_offset(model: &NoiseModel, offset: f64, rng: &'a mut R) -> Self {
        let k: f64 = StandardNormal.sample(rng);
        let ou = (model.ou_sigma > 0.0).then(|| OuProcess::stationary(model.ou_sigma, model.ou_tau_c, rng));
        Self { offset, drift_rate: model.drift_sigma * k, ou, t: 0.0, rng }
    }
}

impl<R: Rng + ?Sized> DetuningSource for ShotNoise<'_, R> {
    fn mean_over(&mut self, duration: f64) -> f64 {
        let drift = self.drift_rate * (self.t + duration / 2.0);
        self.t += duration;
        let ou = match &mut self.ou {
            Some(p) if duration > 0.0 => p.step(duration, self.rng) / duration,
            Some(p) => p.x,
            None => 0.0,
        };
        self.offset + drift + ou
    }
}
