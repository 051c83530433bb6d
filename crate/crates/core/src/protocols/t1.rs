//! Spin relaxation under optical leakage.

use rayon::prelude::*;

use super::sequence::{simulate, PulseSequence, QubitContext, StaticDetuning};
use super::{Axis, ScanMetadata, ScanResult};
use crate::error::Result;

/// |↓⟩ population after initialization and a delay, for each delay (ms).
/// Relaxation comes from the context's leakage Γ/η plus its intrinsic rate.
pub fn run_t1(delays_ms: &[f64], ctx: &QubitContext) -> Result<ScanResult> {
    ctx.noise.validate()?;
    let values = delays_ms
        .par_iter()
        .map(|&d| {
            let seq = PulseSequence::prepared().delay(d * 1e3).readout();
            simulate(&seq, ctx, &mut StaticDetuning(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = values.len();
    ScanResult::new(
        vec![Axis::new("delay", "ms", delays_ms.to_vec())],
        "pop_down",
        values,
        vec![0.0; n],
        ScanMetadata { device: ctx.dev.clone(), seed: 0, repetitions: 1 },
    )
}
