//! Rabi oscillations and the two-pulse phase sweep.

use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;

use super::sequence::{simulate, PulseSequence, QubitContext, StaticDetuning};
use super::{average_quasi_static, Axis, ScanMetadata, ScanResult};
use crate::error::Result;
use crate::raman::{self, RamanDriveParams};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiConfig {
    /// Resonant drive; the scan sets its duration.
    pub drive: RamanDriveParams,
    /// Gauss-Hermite order for the quasi-static average.
    pub nodes: usize,
}

impl Default for RabiConfig {
    fn default() -> Self {
        Self { drive: RamanDriveParams::new(1200.0, 650.0), nodes: 12 }
    }
}

/// |↓⟩ population after a pulse of each duration (μs), including the
/// depolarisation response ¼(1 − e^{−Tγ₁/2π}) with γ₁ the context's
/// intrinsic rate.
pub fn run_rabi(durations_us: &[f64], cfg: &RabiConfig, ctx: &QubitContext) -> Result<ScanResult> {
    ctx.noise.validate()?;
    let gamma1 = ctx.noise.gamma1;
    let values = durations_us
        .par_iter()
        .map(|&t| {
            let drive = RamanDriveParams { duration_us: t, ..cfg.drive };
            let seq = PulseSequence::prepared().raman(drive).readout();
            let p = average_quasi_static(ctx.noise.quasi_static_sigma, cfg.nodes, |x| simulate(&seq, ctx, &mut StaticDetuning(x)))?;
            Ok(p + 0.25 * (1.0 - (-units::us(t) * gamma1 / TAU).exp()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = values.len();
    ScanResult::new(
        vec![Axis::new("T", "us", durations_us.to_vec())],
        "pop_down",
        values,
        vec![0.0; n],
        ScanMetadata { device: ctx.dev.clone(), seed: 0, repetitions: cfg.nodes },
    )
}

/// π/2 duration (μs) of a drive under the context's calibration.
pub fn pi_half_duration_us(drive: &RamanDriveParams, ctx: &QubitContext) -> Result<f64> {
    let rabi = match ctx.calibration.rabi_mhz {
        Some(r) => r,
        None => raman::effective_rabi_rate(drive, &ctx.dev)?,
    };
    Ok(FRAC_PI_2 / units::mhz(rabi) * 1e6)
}

/// π/2(0) followed by π/2(φ) for each phase.
pub fn run_phase_sweep(phases: &[f64], cfg: &RabiConfig, ctx: &QubitContext) -> Result<ScanResult> {
    ctx.noise.validate()?;
    let t = pi_half_duration_us(&cfg.drive, ctx)?;
    let first = RamanDriveParams { duration_us: t, phase: 0.0, ..cfg.drive };
    let values = phases
        .par_iter()
        .map(|&phi| {
            let second = RamanDriveParams { phase: phi, ..first };
            let seq = PulseSequence::prepared().raman(first).raman(second).readout();
            average_quasi_static(ctx.noise.quasi_static_sigma, cfg.nodes, |x| simulate(&seq, ctx, &mut StaticDetuning(x)))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = values.len();
    ScanResult::new(
        vec![Axis::new("phi", "rad", phases.to_vec())],
        "pop_down",
        values,
        vec![0.0; n],
        ScanMetadata { device: ctx.dev.clone(), seed: 0, repetitions: cfg.nodes },
    )
}
