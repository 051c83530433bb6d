//! Coherent population trapping on the three-level lambda system.

use rayon::prelude::*;

use super::noise::NuclearSpinModel;
use super::{average_manifolds, Axis, ScanMetadata, ScanResult};
use crate::device::DeviceParams;
use crate::error::{ensure_non_negative, ensure_positive, Result};
use crate::lindblad::pauli::{ket_bra, projector};
use crate::lindblad::{steady_state, CollapseOperator, LindbladSystem};
use crate::raman::LambdaParams;
use crate::units::{self, lambda};
use crate::{CMatrix, C64};

/// Lambda-system drive and rates. Frequencies are ordinary (MHz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptConfig {
    /// Common Rabi scale Ω₀; the legs are √(1−f)Ω₀ and √f·Ω₀.
    pub scale_mhz: f64,
    /// Excited-state decay Γ/2π.
    pub gamma_mhz: f64,
    /// Single-photon detuning Δ/2π.
    pub delta_mhz: f64,
    /// Ground-state pure dephasing γ_{↓↓,↑↑}.
    pub dephasing_mhz: f64,
    /// Ground-state relaxation γ_{↓,↑}.
    pub relaxation_mhz: f64,
    pub eta: f64,
}

impl CptConfig {
    /// Resonant lambda drive with narrow dark resonances.
    pub fn for_device(dev: &DeviceParams) -> Self {
        Self { scale_mhz: 8.0, gamma_mhz: 32.0, delta_mhz: 0.0, dephasing_mhz: 0.5, relaxation_mhz: 0.2, eta: dev.eta }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("scale", self.scale_mhz)?;
        ensure_positive("gamma", self.gamma_mhz)?;
        ensure_non_negative("dephasing", self.dephasing_mhz)?;
        ensure_non_negative("relaxation", self.relaxation_mhz)?;
        ensure_positive("eta", self.eta)?;
        Ok(())
    }

    pub fn lambda(&self) -> LambdaParams {
        LambdaParams::from_scale(self.scale_mhz, self.gamma_mhz, self.eta)
    }
}

/// The lambda system at two-photon detuning δ/2π = `two_photon_mhz`, in the
/// frame rotating with the |↓⟩–|E⟩ drive. Basis (|↓⟩, |↑⟩, |E⟩).
pub fn cpt_system(cfg: &CptConfig, two_photon_mhz: f64) -> Result<LindbladSystem> {
    cfg.validate()?;
    let lp = cfg.lambda();
    let (o1, o2) = (units::mhz(lp.omega1_mhz) / 2.0, units::mhz(lp.omega2_mhz) / 2.0);
    let mut h = CMatrix::zeros(3, 3);
    h[(lambda::DOWN, lambda::DOWN)] = C64::from(-units::mhz(cfg.delta_mhz));
    h[(lambda::UP, lambda::UP)] = C64::from(-units::mhz(two_photon_mhz));
    h[(lambda::DOWN, lambda::EXCITED)] = C64::from(o1);
    h[(lambda::EXCITED, lambda::DOWN)] = C64::from(o1);
    h[(lambda::UP, lambda::EXCITED)] = C64::from(o2);
    h[(lambda::EXCITED, lambda::UP)] = C64::from(o2);

    let (g_down, g_up) = lp.decay_rates();
    let dephasing = projector(3, lambda::DOWN) - projector(3, lambda::UP);
    let flip = ket_bra(3, lambda::DOWN, lambda::UP) + ket_bra(3, lambda::UP, lambda::DOWN);
    let collapses = vec![
        CollapseOperator::with_rate("decay_down", g_down / 2.0, &ket_bra(3, lambda::DOWN, lambda::EXCITED)),
        CollapseOperator::with_rate("decay_up", g_up / 2.0, &ket_bra(3, lambda::UP, lambda::EXCITED)),
        CollapseOperator::with_rate("dephasing", units::mhz(cfg.dephasing_mhz) / 2.0, &dephasing),
        CollapseOperator::with_rate("relaxation", units::mhz(cfg.relaxation_mhz) / 2.0, &flip),
    ];
    LindbladSystem::new(h, collapses)
}

/// Steady-state excited population at each two-photon detuning (MHz),
/// summed over the nuclear manifolds, which shift δ by ∓A/2.
pub fn run_cpt(two_photon_mhz: &[f64], cfg: &CptConfig, dev: &DeviceParams, nuc: &NuclearSpinModel) -> Result<ScanResult> {
    cfg.validate()?;
    nuc.validate()?;
    let values = two_photon_mhz
        .par_iter()
        .map(|&d| {
            average_manifolds(nuc, |shift| {
                let sys = cpt_system(cfg, d - units::to_mhz(shift))?;
                Ok(steady_state(&sys)?.population(lambda::EXCITED))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = values.len();
    ScanResult::new(
        vec![Axis::new("two_photon_detuning", "MHz", two_photon_mhz.to_vec())],
        "rho_EE",
        values,
        vec![0.0; n],
        ScanMetadata { device: dev.clone(), seed: 0, repetitions: 1 },
    )
}

/// Positions of local minima, refined by a parabola through each minimum
/// and its neighbours.
pub fn local_minima(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] < y[i - 1] && y[i] <= y[i + 1])
        .map(|i| {
            let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
            let h = x[i + 1] - x[i];
            let denom = y0 - 2.0 * y1 + y2;
            if denom > 0.0 {
                x[i] + 0.5 * h * (y0 - y2) / denom
            } else {
                x[i]
            }
        })
        .collect()
}

/// The two deepest local minima, in ascending position.
pub fn dark_dips(x: &[f64], y: &[f64]) -> Vec<f64> {
    let depth = |pos: f64| {
        let i = x.iter().position(|&v| v >= pos).unwrap_or(x.len() - 1);
        y[i].min(y[i.saturating_sub(1)])
    };
    let mut minima = local_minima(x, y);
    minima.sort_by(|&a, &b| depth(a).total_cmp(&depth(b)));
    minima.truncate(2);
    minima.sort_by(f64::total_cmp);
    minima
}
