//! Hahn echo and CPMG-2 with Monte-Carlo detuning noise.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use super::sequence::{run_segments, DetuningSource, PulseSequence, QubitContext, Segment, SequenceState, StaticDetuning};
use super::{mean_stderr, point_rng, Axis, ScanMetadata, ScanResult, ShotNoise};
use crate::error::{ensure_positive, Error, Result};
use crate::fitting::{extract_visibility, Visibility};
use crate::raman::{self, RamanDriveParams};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecouplingKind {
    /// One π pulse about x.
    Hahn,
    /// Two π pulses about y.
    Cpmg2,
}

impl DecouplingKind {
    pub fn pulses(self) -> usize {
        match self {
            DecouplingKind::Hahn => 1,
            DecouplingKind::Cpmg2 => 2,
        }
    }

    fn pi_phase(self) -> f64 {
        match self {
            DecouplingKind::Hahn => 0.0,
            DecouplingKind::Cpmg2 => FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecouplingConfig {
    pub kind: DecouplingKind,
    pub drive: RamanDriveParams,
    pub shots: usize,
    pub seed: u64,
}

impl DecouplingConfig {
    /// Hahn echo at Δ/2π = 600 MHz or CPMG-2 at 800 MHz, both at 200 nW.
    pub fn new(kind: DecouplingKind) -> Self {
        let delta = match kind {
            DecouplingKind::Hahn => 600.0,
            DecouplingKind::Cpmg2 => 800.0,
        };
        Self { kind, drive: RamanDriveParams::new(delta, 200.0), shots: 400, seed: 1 }
    }
}

/// π/2 → [τ/2N → π → τ/2N]×N → π/2(φ), with pulse durations from the
/// context's Rabi rate. τ counts only the free evolution.
pub fn decoupling_sequence(cfg: &DecouplingConfig, ctx: &QubitContext, tau_us: f64, phi: f64) -> Result<PulseSequence> {
    let rabi = match ctx.calibration.rabi_mhz {
        Some(r) => r,
        None => raman::effective_rabi_rate(&cfg.drive, &ctx.dev)?,
    };
    ensure_positive("rabi", rabi)?;
    let t_pi = PI / units::mhz(rabi) * 1e6;
    let half = RamanDriveParams { duration_us: t_pi / 2.0, phase: 0.0, ..cfg.drive };
    let pi = RamanDriveParams { duration_us: t_pi, phase: cfg.kind.pi_phase(), ..cfg.drive };
    let n = cfg.kind.pulses();
    let gap = tau_us / (2 * n) as f64;
    let mut seq = PulseSequence::prepared().raman(half);
    for _ in 0..n {
        seq = seq.delay(gap).raman(pi).delay(gap);
    }
    Ok(seq.raman(RamanDriveParams { phase: phi, ..half }).readout())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingResult {
    /// Population over (τ μs, φ rad).
    pub scan: ScanResult,
    pub visibility: Vec<Visibility>,
    /// Visibility against τ (μs).
    pub trace: ScanResult,
}

impl DecouplingResult {
    pub fn visibility_values(&self) -> Vec<f64> {
        self.visibility.iter().map(|v| v.value).collect()
    }
}

/// Per-τ Monte-Carlo summary: mean and standard error at each φ, plus
/// the per-shot projections onto (cos φ, 1).
struct PhaseScan {
    means: Vec<f64>,
    errors: Vec<f64>,
    /// Covariance (aa, bb, ab) of the mean per-shot projections.
    ab_cov: (f64, f64, f64),
}

/// Least-squares projector rows for a·cos φ + b.
fn cosine_projector(phases: &[f64]) -> Result<[Vec<f64>; 2]> {
    let n = phases.len() as f64;
    let sc: f64 = phases.iter().map(|p| p.cos()).sum();
    let scc: f64 = phases.iter().map(|p| p.cos().powi(2)).sum();
    let det = n * scc - sc * sc;
    if det.abs() < 1e-12 {
        return Err(Error::InvalidParameter { name: "phases", reason: "cos φ is constant over the grid".into() });
    }
    let a = phases.iter().map(|p| (n * p.cos() - sc) / det).collect();
    let b = phases.iter().map(|p| (scc - sc * p.cos()) / det).collect();
    Ok([a, b])
}

/// Runs `cfg.shots` noise shots from stream `index` for one τ.
fn phase_scan(cfg: &DecouplingConfig, ctx: &QubitContext, tau_us: f64, phases: &[f64], index: u64) -> Result<PhaseScan> {
    let seq = decoupling_sequence(cfg, ctx, tau_us, 0.0)?;
    seq.validate()?;
    let (body, tail) = seq.segments.split_at(seq.segments.len() - 2);
    let Segment::Raman(last) = tail[0] else {
        return Err(Error::InvalidSequence("decoupling sequence must end in a pulse and readout".into()));
    };
    let [pa, pb] = cosine_projector(phases)?;
    let mut rng = point_rng(cfg.seed, index);
    let shots = cfg.shots.max(1);
    let mut samples = vec![Vec::with_capacity(shots); phases.len()];
    let mut ab = Vec::with_capacity(shots);
    let mut row = vec![0.0; phases.len()];
    for _ in 0..shots {
        let mut noise = ShotNoise::sample(&ctx.noise, &mut rng);
        let mut state = SequenceState::mixed()?;
        run_segments(body, ctx, &mut state, &mut noise)?;
        // The final pulse sees one noise value shared across φ.
        let shift = noise.mean_over(units::us(last.duration_us));
        for (k, &phi) in phases.iter().enumerate() {
            let mut s = state.clone();
            let pulse = Segment::Raman(RamanDriveParams { phase: phi, ..last });
            run_segments(&[pulse], ctx, &mut s, &mut StaticDetuning(shift))?;
            row[k] = s.population_down();
            samples[k].push(row[k]);
        }
        let dot = |p: &[f64]| p.iter().zip(&row).map(|(a, b)| a * b).sum::<f64>();
        ab.push((dot(&pa), dot(&pb)));
    }
    let (means, errors) = samples.iter().map(|s| mean_stderr(s)).unzip();
    let m = shots as f64;
    let (ma, mb) = (ab.iter().map(|v| v.0).sum::<f64>() / m, ab.iter().map(|v| v.1).sum::<f64>() / m);
    let dof = (m - 1.0).max(1.0) * m;
    let caa = ab.iter().map(|v| (v.0 - ma).powi(2)).sum::<f64>() / dof;
    let cbb = ab.iter().map(|v| (v.1 - mb).powi(2)).sum::<f64>() / dof;
    let cab = ab.iter().map(|v| (v.0 - ma) * (v.1 - mb)).sum::<f64>() / dof;
    Ok(PhaseScan { means, errors, ab_cov: (caa, cbb, cab) })
}

/// Visibility sign of the ideal sequence, so echoes report positive
/// contrast regardless of the final-pulse convention.
fn reference_sign(cfg: &DecouplingConfig, ctx: &QubitContext, phases: &[f64]) -> Result<f64> {
    let mut ideal = ctx.clone();
    ideal.noise = super::NoiseModel::noiseless();
    ideal.calibration.optical_scattering = false;
    ideal.init_fidelity = 1.0;
    let cfg = DecouplingConfig { shots: 1, ..*cfg };
    let scan = phase_scan(&cfg, &ideal, 0.0, phases, 0)?;
    let v = extract_visibility(phases, &scan.means, None)?;
    Ok(if v.amplitude < 0.0 { -1.0 } else { 1.0 })
}

/// Runs the sequence for each τ (μs) and φ (rad) and extracts the
/// visibility a/b of a·cos φ + b per τ.
pub fn run_decoupling(taus_us: &[f64], phases: &[f64], cfg: &DecouplingConfig, ctx: &QubitContext) -> Result<DecouplingResult> {
    ctx.noise.validate()?;
    if phases.len() < 3 {
        return Err(Error::InvalidParameter { name: "phases", reason: "need at least 3 phases".into() });
    }
    let sign = reference_sign(cfg, ctx, phases)?;
    let rows = taus_us.par_iter().enumerate().map(|(i, &tau)| phase_scan(cfg, ctx, tau, phases, i as u64)).collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(taus_us.len() * phases.len());
    let mut errors = Vec::with_capacity(values.capacity());
    let mut visibility = Vec::with_capacity(taus_us.len());
    for row in &rows {
        let mut v = extract_visibility(phases, &row.means, None)?;
        // Shot noise is common to all φ of a shot, so the error of a/b
        // comes from the spread of per-shot projections.
        let (caa, cbb, cab) = row.ab_cov;
        let (a, b) = (v.amplitude, v.offset);
        let var = caa / (b * b) + a * a * cbb / b.powi(4) - 2.0 * a * cab / b.powi(3);
        v.error = var.max(0.0).sqrt();
        v.value *= sign;
        v.amplitude *= sign;
        visibility.push(v);
        values.extend_from_slice(&row.means);
        errors.extend_from_slice(&row.errors);
    }
    let meta = ScanMetadata { device: ctx.dev.clone(), seed: cfg.seed, repetitions: cfg.shots };
    let scan = ScanResult::new(
        vec![Axis::new("tau", "us", taus_us.to_vec()), Axis::new("phi", "rad", phases.to_vec())],
        "pop_down",
        values,
        errors,
        meta.clone(),
    )?;
    let trace = ScanResult::new(
        vec![Axis::new("tau", "us", taus_us.to_vec())],
        "visibility",
        visibility.iter().map(|v| v.value).collect(),
        visibility.iter().map(|v| v.error).collect(),
        meta,
    )?;
    Ok(DecouplingResult { scan, visibility, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceParams;
    use crate::protocols::noise::NoiseModel;

    fn phases() -> Vec<f64> {
        (0..8).map(|k| k as f64 * PI / 4.0).collect()
    }

    #[test]
    fn noiseless_visibility_is_ideal() {
        let mut ctx = QubitContext::new(DeviceParams::default(), NoiseModel::noiseless());
        ctx.calibration.optical_scattering = false;
        for kind in [DecouplingKind::Hahn, DecouplingKind::Cpmg2] {
            let cfg = DecouplingConfig { shots: 2, ..DecouplingConfig::new(kind) };
            let r = run_decoupling(&[0.0, 5.0, 20.0], &phases(), &cfg, &ctx).unwrap();
            for v in &r.visibility {
                assert!((v.value - 1.0).abs() < 1e-9, "{kind:?}: {}", v.value);
            }
        }
    }

    #[test]
    fn echo_refocuses_quasi_static_offset() {
        let mut ctx = QubitContext::new(DeviceParams::default(), NoiseModel::noiseless());
        ctx.calibration.optical_scattering = false;
        ctx.noise.quasi_static_sigma = crate::protocols::noise::quasi_static_sigma(1.3);
        let cfg = DecouplingConfig { shots: 50, ..DecouplingConfig::new(DecouplingKind::Hahn) };
        let r = run_decoupling(&[10.0], &phases(), &cfg, &ctx).unwrap();
        assert!(r.visibility[0].value > 0.97, "{}", r.visibility[0].value);
    }

    #[test]
    fn results_are_reproducible() {
        let dev = DeviceParams::default();
        let ctx = QubitContext::new(dev.clone(), NoiseModel::calibrated(&dev).unwrap());
        let cfg = DecouplingConfig { shots: 20, ..DecouplingConfig::new(DecouplingKind::Hahn) };
        let a = run_decoupling(&[5.0, 25.0], &phases(), &cfg, &ctx).unwrap();
        let b = run_decoupling(&[5.0, 25.0], &phases(), &cfg, &ctx).unwrap();
        assert_eq!(a, b);
    }
}
