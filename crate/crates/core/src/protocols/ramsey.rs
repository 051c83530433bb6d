//! Serrodyne Ramsey interferometry over (τ, δ).

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::sequence::{run_segments, PulseSequence, QubitContext, SequenceState, StaticDetuning};
use super::{average_quasi_static, Axis, ScanMetadata, ScanResult};
use crate::error::{ensure_positive, Result};
use crate::fitting::models::ramsey_2d_value;
use crate::raman::RamanDriveParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyConfig {
    pub drive: RamanDriveParams,
    /// π/2 pulse duration (μs); the pulse Rabi rate is set to match it.
    pub t_pi2_us: f64,
    /// ω_S/2π (MHz); the second pulse has phase ω_S·τ.
    pub serrodyne_mhz: f64,
    /// Δ_AC/2π (MHz) during free precession.
    pub ac_stark_mhz: f64,
    pub nodes: usize,
}

impl Default for RamseyConfig {
    fn default() -> Self {
        Self { drive: RamanDriveParams::new(300.0, 260.0), t_pi2_us: 0.05, serrodyne_mhz: 5.0, ac_stark_mhz: 3.3, nodes: 24 }
    }
}

impl RamseyConfig {
    /// Ω/2π (MHz) giving a π/2 rotation in `t_pi2_us`.
    pub fn pulse_rabi_mhz(&self) -> f64 {
        0.25 / self.t_pi2_us
    }
}

/// π/2 → Delay(τ) → π/2(ω_S·τ) at two-photon detuning δ.
pub fn ramsey_sequence(cfg: &RamseyConfig, tau_us: f64, delta_mhz: f64) -> PulseSequence {
    let first = RamanDriveParams { duration_us: cfg.t_pi2_us, two_photon_delta_mhz: delta_mhz, phase: 0.0, ..cfg.drive };
    let second = RamanDriveParams { phase: TAU * cfg.serrodyne_mhz * tau_us, ..first };
    PulseSequence::prepared().raman(first).delay(tau_us).raman(second).readout()
}

/// 2-D scan over (τ μs, δ MHz) of the |↓⟩ population, τ outermost.
pub fn run_ramsey(taus_us: &[f64], deltas_mhz: &[f64], cfg: &RamseyConfig, ctx: &QubitContext) -> Result<ScanResult> {
    ensure_positive("t_pi2", cfg.t_pi2_us)?;
    ctx.noise.validate()?;
    let mut local = ctx.clone();
    local.calibration.rabi_mhz = Some(cfg.pulse_rabi_mhz());
    local.ac_stark = crate::units::mhz(cfg.ac_stark_mhz);
    let points: Vec<(f64, f64)> = taus_us.iter().flat_map(|&t| deltas_mhz.iter().map(move |&d| (t, d))).collect();
    let values = points
        .par_iter()
        .map(|&(tau, delta)| {
            let seq = ramsey_sequence(cfg, tau, delta);
            seq.validate()?;
            average_quasi_static(local.noise.quasi_static_sigma, cfg.nodes, |x| {
                let mut state = SequenceState::mixed()?;
                run_segments(&seq.segments, &local, &mut state, &mut StaticDetuning(x))?;
                Ok(state.population_down())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = values.len();
    ScanResult::new(
        vec![Axis::new("tau", "us", taus_us.to_vec()), Axis::new("delta", "MHz", deltas_mhz.to_vec())],
        "pop_down",
        values,
        vec![0.0; n],
        ScanMetadata { device: ctx.dev.clone(), seed: 0, repetitions: cfg.nodes },
    )
}

/// Closed-form Ramsey map on a grid, τ outermost, with parameters
/// (Δ_AC, c₀, c₁, c₂).
pub fn ramsey_closed_form(
    taus_us: &[f64],
    deltas_mhz: &[f64],
    params: &[f64; 4],
    t2_star_us: f64,
    cfg: &RamseyConfig,
    ctx: &QubitContext,
) -> Result<ScanResult> {
    let values: Vec<f64> = taus_us
        .iter()
        .flat_map(|&t| deltas_mhz.iter().map(move |&d| ramsey_2d_value(params, t, d, t2_star_us, cfg.t_pi2_us, cfg.serrodyne_mhz)))
        .collect();
    let n = values.len();
    ScanResult::new(
        vec![Axis::new("tau", "us", taus_us.to_vec()), Axis::new("delta", "MHz", deltas_mhz.to_vec())],
        "pop_down",
        values,
        vec![0.0; n],
        ScanMetadata { device: ctx.dev.clone(), seed: 0, repetitions: 1 },
    )
}

/// Standard deviation across δ of each τ column of a 2-D scan. Columns
/// that alias to a uniform phase across the δ grid show up as minima.
pub fn column_contrast(scan: &ScanResult) -> Vec<f64> {
    (0..scan.x().len())
        .map(|i| {
            let row = scan.row(i);
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / row.len() as f64).sqrt()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceParams;
    use crate::protocols::noise::NoiseModel;

    fn ctx() -> QubitContext {
        let mut c = QubitContext::new(DeviceParams::default(), NoiseModel::noiseless());
        c.calibration.optical_scattering = false;
        c
    }

    #[test]
    fn zero_shifts_give_serrodyne_fringes() {
        let cfg = RamseyConfig { ac_stark_mhz: 0.0, t_pi2_us: 1e-4, ..RamseyConfig::default() };
        let taus: Vec<f64> = (0..40).map(|k| 0.013 * k as f64).collect();
        let scan = run_ramsey(&taus, &[0.0], &cfg, &ctx()).unwrap();
        for (t, p) in taus.iter().zip(&scan.values) {
            let expected = 0.5 * (1.0 + (TAU * 5.0 * t).cos());
            assert!((p - expected).abs() < 1e-3, "{t}: {p} vs {expected}");
        }
    }

    #[test]
    fn closed_form_columns_alias_on_coarse_delta_grid() {
        let c = ctx();
        let cfg = RamseyConfig::default();
        let taus: Vec<f64> = (0..=80).map(|k| 0.025 * k as f64).collect();
        let coarse: Vec<f64> = (-5..=5).map(f64::from).collect();
        let p = [3.3, 0.25, 10.0, 0.0];
        let scan = ramsey_closed_form(&taus, &coarse, &p, 1.3, &cfg, &c).unwrap();
        let contrast = column_contrast(&scan);
        // τ + 2T_{π/2} = 1 μs makes the per-MHz phase step a full turn.
        let aliased = taus.iter().position(|&t| (t - 0.9).abs() < 1e-9).unwrap();
        let typical = contrast[aliased - 8];
        assert!(contrast[aliased] < 0.1 * typical, "{} vs {typical}", contrast[aliased]);
    }
}
