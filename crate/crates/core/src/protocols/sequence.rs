//! Pulse sequences and their evaluation on the effective two-level qubit.

use crate::device::DeviceParams;
use crate::error::{ensure_non_negative, Error, Result};
use crate::lindblad::pauli::{sigma_x, sigma_z};
use crate::lindblad::{apply_superoperator, CollapseOperator, DensityMatrix, LindbladSystem};
use crate::raman::{self, two_level_hamiltonian, RamanDriveParams};
use crate::units::{self, qubit};
use crate::CMatrix;

use super::noise::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Charge stabilisation; only advances the clock.
    Stabilize {
        duration_us: f64,
    },
    /// Scrambles the spin to the fully mixed state.
    Reset {
        duration_us: f64,
    },
    /// Optical pumping into |↑⟩ with the context's initialization fidelity.
    Initialize {
        duration_us: f64,
    },
    Raman(RamanDriveParams),
    Delay {
        duration_us: f64,
    },
    Readout {
        duration_us: f64,
    },
}

impl Segment {
    pub fn duration_us(&self) -> f64 {
        match *self {
            Segment::Stabilize { duration_us }
            | Segment::Reset { duration_us }
            | Segment::Initialize { duration_us }
            | Segment::Delay { duration_us }
            | Segment::Readout { duration_us } => duration_us,
            Segment::Raman(d) => d.duration_us,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pub segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stabilize, reset and initialize, the common preamble of every run.
    pub fn prepared() -> Self {
        Self::new()
            .then(Segment::Stabilize { duration_us: 0.0 })
            .then(Segment::Reset { duration_us: 0.0 })
            .then(Segment::Initialize { duration_us: 0.0 })
    }

    pub fn then(mut self, seg: Segment) -> Self {
        self.segments.push(seg);
        self
    }

    pub fn raman(self, drive: RamanDriveParams) -> Self {
        self.then(Segment::Raman(drive))
    }

    pub fn delay(self, duration_us: f64) -> Self {
        self.then(Segment::Delay { duration_us })
    }

    pub fn readout(self) -> Self {
        self.then(Segment::Readout { duration_us: 0.0 })
    }

    pub fn total_duration_us(&self) -> f64 {
        self.segments.iter().map(Segment::duration_us).sum()
    }

    /// Exactly one readout, placed last, and no negative durations.
    pub fn validate(&self) -> Result<()> {
        let readouts = self.segments.iter().filter(|s| matches!(s, Segment::Readout { .. })).count();
        if readouts != 1 {
            return Err(Error::InvalidSequence(format!("expected exactly one readout, found {readouts}")));
        }
        if !matches!(self.segments.last(), Some(Segment::Readout { .. })) {
            return Err(Error::InvalidSequence("readout must be the last segment".into()));
        }
        for seg in &self.segments {
            ensure_non_negative("duration", seg.duration_us())?;
            if let Segment::Raman(d) = seg {
                d.validate()?;
            }
        }
        Ok(())
    }
}

/// How a Raman drive maps onto the qubit: Rabi rate and scattering either
/// from the closed forms or from per-dataset overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCalibration {
    /// Ω/2π (MHz) used instead of the closed form.
    pub rabi_mhz: Option<f64>,
    /// Γ_os (μs⁻¹) used instead of the closed form.
    pub gamma_os_per_us: Option<f64>,
    /// Include Γ_os dephasing and Γ_os/η relaxation during pulses.
    pub optical_scattering: bool,
}

impl Default for DriveCalibration {
    fn default() -> Self {
        Self { rabi_mhz: None, gamma_os_per_us: None, optical_scattering: true }
    }
}

impl DriveCalibration {
    /// (Ω in rad/s, Γ_os in s⁻¹) for a drive.
    pub fn resolve(&self, drive: &RamanDriveParams, dev: &DeviceParams) -> Result<(f64, f64)> {
        let rabi = match self.rabi_mhz {
            Some(r) => r,
            None => raman::effective_rabi_rate(drive, dev)?,
        };
        let gamma_os = match self.gamma_os_per_us {
            Some(g) => g,
            None => raman::scattering_rate(drive, dev)?.gamma_os_per_us,
        };
        let gamma_os = if self.optical_scattering { units::per_us(gamma_os) } else { 0.0 };
        Ok((units::mhz(rabi), gamma_os))
    }
}

/// Everything besides the sequence that a qubit run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitContext {
    pub dev: DeviceParams,
    pub noise: NoiseModel,
    pub calibration: DriveCalibration,
    /// Probability of ending in |↑⟩ after Initialize.
    pub init_fidelity: f64,
    /// Differential AC Stark shift Δ_AC (rad/s): the spin splitting is
    /// lower by this much whenever the drive is off.
    pub ac_stark: f64,
    /// Static shift of the spin splitting (rad/s), e.g. a hyperfine ±A/2.
    pub splitting_offset: f64,
}

impl QubitContext {
    pub fn new(dev: DeviceParams, noise: NoiseModel) -> Self {
        Self { dev, noise, calibration: DriveCalibration::default(), init_fidelity: 1.0, ac_stark: 0.0, splitting_offset: 0.0 }
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        let f = self.init_fidelity;
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidParameter { name: "init_fidelity", reason: format!("{f} outside [0, 1]") });
        }
        let mut pops = [0.0; 2];
        pops[qubit::UP] = f;
        pops[qubit::DOWN] = 1.0 - f;
        DensityMatrix::diagonal(&pops)
    }
}

/// One constant-generator piece of a qubit evolution, all in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSegment {
    pub duration: f64,
    pub omega: f64,
    pub phase: f64,
    /// Coefficient of σz/2 in the drive frame.
    pub detuning: f64,
    /// σz dephasing rate (coherence decays as e^{−γt}).
    pub dephasing: f64,
    /// σx relaxation rate (population imbalance decays as e^{−γt}).
    pub relaxation: f64,
}

impl QubitSegment {
    pub fn system(&self) -> Result<LindbladSystem> {
        let h = two_level_hamiltonian(self.omega, self.detuning, self.phase);
        let mut collapses = Vec::with_capacity(2);
        if self.dephasing > 0.0 {
            collapses.push(CollapseOperator::with_rate("dephasing", self.dephasing / 2.0, &sigma_z()));
        }
        if self.relaxation > 0.0 {
            collapses.push(CollapseOperator::with_rate("relaxation", self.relaxation / 2.0, &sigma_x()));
        }
        LindbladSystem::new(h, collapses)
    }

    pub fn propagator(&self) -> Result<CMatrix> {
        Ok(self.system()?.propagator(self.duration))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if self.duration == 0.0 {
            return Ok(rho.clone());
        }
        apply_superoperator(&self.propagator()?, rho)
    }
}

/// Detuning noise seen by one shot: called with each segment's duration
/// (s) in time order, returns the mean shift of the spin splitting over it
/// (rad/s).
pub trait DetuningSource {
    fn mean_over(&mut self, duration: f64) -> f64;
}

/// Constant offset, the quasi-static limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticDetuning(pub f64);

impl DetuningSource for StaticDetuning {
    fn mean_over(&mut self, _duration: f64) -> f64 {
        self.0
    }
}

/// Qubit state and drive frame carried from segment to segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceState {
    pub rho: DensityMatrix,
    /// Two-photon detuning δ (rad/s) of the most recent drive, which sets
    /// the rotating frame.
    pub frame_delta: f64,
}

impl SequenceState {
    pub fn mixed() -> Result<Self> {
        Ok(Self { rho: DensityMatrix::diagonal(&[0.5, 0.5])?, frame_delta: 0.0 })
    }

    pub fn population_down(&self) -> f64 {
        self.rho.population(qubit::DOWN)
    }
}

/// The constant-generator piece for a Raman or Delay segment; `None` for
/// segments without qubit dynamics. Samples `noise` once per segment.
fn qubit_segment(
    seg: &Segment,
    ctx: &QubitContext,
    state: &mut SequenceState,
    noise: &mut dyn DetuningSource,
) -> Result<Option<QubitSegment>> {
    let duration = units::us(seg.duration_us());
    let noise_shift = noise.mean_over(duration);
    Ok(match seg {
        Segment::Raman(drive) => {
            let (omega, gamma_os) = ctx.calibration.resolve(drive, &ctx.dev)?;
            state.frame_delta = units::mhz(drive.two_photon_delta_mhz);
            let shift = noise_shift + ctx.splitting_offset;
            Some(QubitSegment {
                duration,
                omega,
                phase: drive.phase,
                detuning: shift - state.frame_delta,
                dephasing: gamma_os,
                relaxation: gamma_os / ctx.dev.eta + ctx.noise.gamma1,
            })
        }
        Segment::Delay { .. } => {
            let leak = ctx.noise.leak_dephasing;
            let shift = noise_shift + ctx.splitting_offset - ctx.ac_stark;
            Some(QubitSegment {
                duration,
                omega: 0.0,
                phase: 0.0,
                detuning: shift - state.frame_delta,
                dephasing: leak,
                relaxation: leak / ctx.dev.eta + ctx.noise.gamma1,
            })
        }
        _ => None,
    })
}

/// Applies `segments` in order. Readout leaves the state untouched.
pub fn run_segments(segments: &[Segment], ctx: &QubitContext, state: &mut SequenceState, noise: &mut dyn DetuningSource) -> Result<()> {
    for seg in segments {
        match seg {
            Segment::Reset { .. } => state.rho = DensityMatrix::diagonal(&[0.5, 0.5])?,
            Segment::Initialize { .. } => state.rho = ctx.initial_state()?,
            _ => {}
        }
        if let Some(q) = qubit_segment(seg, ctx, state, noise)? {
            state.rho = q.apply(&state.rho)?;
        }
    }
    Ok(())
}

/// Runs a full sequence and returns the |↓⟩ population at readout.
pub fn simulate(seq: &PulseSequence, ctx: &QubitContext, noise: &mut dyn DetuningSource) -> Result<f64> {
    seq.validate()?;
    let mut state = SequenceState::mixed()?;
    run_segments(&seq.segments, ctx, &mut state, noise)?;
    Ok(state.population_down())
}
