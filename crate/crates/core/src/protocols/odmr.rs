//! Pulsed Raman spectroscopy of the hyperfine-split spin resonance.

use rayon::prelude::*;

use super::noise::NuclearSpinModel;
use super::sequence::{simulate, PulseSequence, QubitContext, StaticDetuning};
use super::{average_manifolds, average_quasi_static, Axis, ScanMetadata, ScanResult};
use crate::error::Result;
use crate::raman::RamanDriveParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdmrConfig {
    /// Drive with its fixed duration; the scan overrides the two-photon
    /// detuning.
    pub drive: RamanDriveParams,
    /// Gauss-Hermite order for the quasi-static average.
    pub nodes: usize,
}

impl Default for OdmrConfig {
    fn default() -> Self {
        Self { drive: RamanDriveParams { duration_us: 1.0, ..RamanDriveParams::new(600.0, 40.0) }, nodes: 16 }
    }
}

/// |↓⟩ population after one Raman pulse at each two-photon detuning (MHz)
/// from the centre of the hyperfine pair.
pub fn run_odmr(two_photon_mhz: &[f64], cfg: &OdmrConfig, ctx: &QubitContext, nuc: &NuclearSpinModel) -> Result<ScanResult> {
    ctx.noise.validate()?;
    nuc.validate()?;
    let values = two_photon_mhz
        .par_iter()
        .map(|&d| {
            let drive = RamanDriveParams { two_photon_delta_mhz: d, ..cfg.drive };
            let seq = PulseSequence::prepared().raman(drive).readout();
            average_manifolds(nuc, |shift| {
                let mut local = ctx.clone();
                local.splitting_offset = ctx.splitting_offset + shift;
                average_quasi_static(ctx.noise.quasi_static_sigma, cfg.nodes, |x| simulate(&seq, &local, &mut StaticDetuning(x)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = values.len();
    ScanResult::new(
        vec![Axis::new("two_photon_detuning", "MHz", two_photon_mhz.to_vec())],
        "pop_down",
        values,
        vec![0.0; n],
        ScanMetadata { device: ctx.dev.clone(), seed: 0, repetitions: cfg.nodes },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceParams;
    use crate::protocols::noise::NoiseModel;

    #[test]
    fn far_off_resonance_keeps_initial_population() {
        let mut ctx = QubitContext::new(DeviceParams::default(), NoiseModel::noiseless());
        ctx.init_fidelity = 0.99;
        let scan = run_odmr(&[200.0], &OdmrConfig::default(), &ctx, &NuclearSpinModel::new(42.6)).unwrap();
        // Scattering relaxation Γ_os/η adds about 0.005 over the pulse.
        assert!((scan.values[0] - 0.015).abs() < 2e-3, "{}", scan.values[0]);
    }

    #[test]
    fn pi_pulse_on_resonance_transfers_fully() {
        let mut ctx = QubitContext::new(DeviceParams::default(), NoiseModel::noiseless());
        ctx.calibration.rabi_mhz = Some(0.5);
        ctx.calibration.optical_scattering = false;
        let scan = run_odmr(&[0.0], &OdmrConfig::default(), &ctx, &NuclearSpinModel::none()).unwrap();
        assert!((scan.values[0] - 1.0).abs() < 1e-12);
    }
}
