//! Experiments as pulse sequences over the effective qubit, plus the
//! three-level CPT model.
//!
//! Scan points are independent. Each point draws from its own RNG stream,
//! derived from the master seed and the point index, so results do not
//! depend on how points are scheduled across threads.

mod cpt;
mod decoupling;
mod init;
pub mod noise;
mod odmr;
mod rabi;
mod ramsey;
pub mod sequence;
mod t1;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::quadrature::GaussHermite;

pub use cpt::{cpt_system, dark_dips, local_minima, run_cpt, CptConfig};
pub use decoupling::{decoupling_sequence, run_decoupling, DecouplingConfig, DecouplingKind, DecouplingResult};
pub use init::{run_init_trace, InitTraceConfig, InitTraces};
pub use noise::{NoiseModel, NuclearSpinModel, OuProcess, ShotNoise};
pub use odmr::{run_odmr, OdmrConfig};
pub use rabi::{pi_half_duration_us, run_phase_sweep, run_rabi, RabiConfig};
pub use ramsey::{column_contrast, ramsey_closed_form, ramsey_sequence, run_ramsey, RamseyConfig};
pub use sequence::{
    run_segments, simulate, DetuningSource, DriveCalibration, PulseSequence, QubitContext, QubitSegment, Segment, SequenceState,
    StaticDetuning,
};
pub use t1::run_t1;

/// Independent RNG stream for scan point `index`.
pub fn point_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, unit: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), unit: unit.into(), values }
    }

    fn header(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{}_{}", self.name, self.unit)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanMetadata {
    pub device: DeviceParams,
    pub seed: u64,
    /// Noise realisations averaged per point.
    pub repetitions: usize,
}

/// A 1-D or 2-D scan. For two axes, `values` is row-major with the first
/// axis outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub axes: Vec<Axis>,
    /// Column header of the measured quantity.
    pub quantity: String,
    pub values: Vec<f64>,
    /// Monte-Carlo standard error per point; zero for deterministic scans.
    pub stderr: Vec<f64>,
    pub metadata: ScanMetadata,
}

impl ScanResult {
    pub fn new(axes: Vec<Axis>, quantity: impl Into<String>, values: Vec<f64>, stderr: Vec<f64>, metadata: ScanMetadata) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.values.len()).product();
        if values.len() != n || stderr.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: values.len().max(stderr.len()) });
        }
        Ok(Self { axes, quantity: quantity.into(), values, stderr, metadata })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values of the first axis.
    pub fn x(&self) -> &[f64] {
        &self.axes[0].values
    }

    /// Row `i` of a 2-D scan (fixed first-axis value).
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.axes.get(1).map_or(1, |a| a.values.len());
        &self.values[i * w..(i + 1) * w]
    }

    pub fn row_stderr(&self, i: usize) -> &[f64] {
        let w = self.axes.get(1).map_or(1, |a| a.values.len());
        &self.stderr[i * w..(i + 1) * w]
    }

    /// Long-format CSV: one column per axis, then value and stderr.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for a in &self.axes {
            out.push_str(&a.header());
            out.push(',');
        }
        let _ = writeln!(out, "{},stderr", self.quantity);
        let mut index = vec![0usize; self.axes.len()];
        for (v, e) in self.values.iter().zip(&self.stderr) {
            for (a, &i) in self.axes.iter().zip(&index) {
                let _ = write!(out, "{},", a.values[i]);
            }
            let _ = writeln!(out, "{v:.9},{e:.3e}");
            for k in (0..index.len()).rev() {
                index[k] += 1;
                if index[k] < self.axes[k].values.len() {
                    break;
                }
                index[k] = 0;
            }
        }
        out
    }
}

/// E[f(δ)] over δ ~ N(0, σ²) by Gauss-Hermite quadrature; a single
/// evaluation at δ = 0 when σ = 0.
pub(crate) fn average_quasi_static<F>(sigma: f64, nodes: usize, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if sigma == 0.0 || nodes <= 1 {
        return f(0.0);
    }
    let rule = GaussHermite::new(nodes);
    let mut acc = 0.0;
    for (x, w) in rule.points(sigma) {
        acc += w * f(x)?;
    }
    Ok(acc)
}

/// Weighted sum of `f(shift)` over the nuclear manifolds.
pub(crate) fn average_manifolds<F>(nuc: &NuclearSpinModel, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    nuc.validate()?;
    let mut acc = 0.0;
    for (shift, w) in nuc.manifolds() {
        acc += w * f(shift)?;
    }
    Ok(acc)
}

/// Mean and standard error of the mean.
pub(crate) fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
