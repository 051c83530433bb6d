//! Dormand-Prince 5(4) with PI step-size control. The Lindbladian is
//! time independent, so the stage nodes cᵢ never appear.

use super::LindbladSystem;
use crate::error::{Error, Result};
use crate::{CMatrix, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    /// Local error bound per step, relative to Tr ρ₀ (max-norm over entries).
    pub atol: f64,
    /// First trial step in seconds; chosen from ‖L(ρ₀)‖ when `None`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { atol: 1e-9, initial_step: None, max_steps: 20_000_000 }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const ALPHA: f64 = 0.17;
const BETA: f64 = 0.04;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Linear combination y + h·Σ wᵢkᵢ.
fn combine(y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)]) -> CMatrix {
    let mut out = y.clone();
    for &(w, k) in terms {
        if w != 0.0 {
            out += k * C64::new(h * w, 0.0);
        }
    }
    out
}

struct Step {
    y: CMatrix,
    f_end: CMatrix,
    err: f64,
}

fn try_step(sys: &LindbladSystem, y: &CMatrix, k1: &CMatrix, h: f64) -> Step {
    let k2 = sys.rhs(&combine(y, h, &[(A21, k1)]));
    let k3 = sys.rhs(&combine(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = sys.rhs(&combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = sys.rhs(&combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = sys.rhs(&combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y_new = combine(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = sys.rhs(&y_new);
    let zero = CMatrix::zeros(y.nrows(), y.ncols());
    let e = combine(&zero, h, &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
    Step { y: y_new, f_end: k7, err: max_abs(&e) }
}

pub(super) fn integrate(sys: &LindbladSystem, rho0: &CMatrix, times: &[f64], opts: &EvolveOptions) -> Result<Vec<CMatrix>> {
    let atol = opts.atol * rho0.trace().re.abs().max(f64::MIN_POSITIVE);
    let span = times.last().copied().unwrap_or(0.0);

    let mut t = 0.0;
    let mut y = rho0.clone();
    let mut f = sys.rhs(&y);
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let d0 = max_abs(&y).max(1e-5);
        let d1 = max_abs(&f);
        if d1 > 0.0 {
            0.01 * d0 / d1
        } else {
            span.max(1e-12)
        }
    });
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(times.len());

    for &target in times {
        while t < target {
            let remaining = target - t;
            let clamped = h >= remaining;
            let h_try = if clamped { remaining } else { h };
            if !clamped && h_try <= 1e-14 * target.max(span) {
                return Err(Error::IntegrationFailure { t_reached: t, reason: format!("step size underflow ({h_try:.3e} s)") });
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::IntegrationFailure { t_reached: t, reason: format!("exceeded {} steps", opts.max_steps) });
            }

            let step = try_step(sys, &y, &f, h_try);
            let err = step.err / atol;
            if err.is_finite() && err <= 1.0 {
                let e = err.max(1e-10);
                let factor = (SAFETY * e.powf(-ALPHA) * err_prev.powf(BETA)).clamp(MIN_FACTOR, MAX_FACTOR);
                let proposal = h_try * factor;
                h = if clamped { h.max(proposal) } else { proposal };
                err_prev = e;
                t = if clamped { target } else { t + h_try };
                // `rhs` is only the Lindbladian on Hermitian input, so rounding
                // must not accumulate an anti-Hermitian part.
                y = (&step.y + step.y.adjoint()).scale(0.5);
                f = step.f_end;
            } else {
                let factor = if err.is_finite() { (SAFETY * err.powf(-0.2)).max(MIN_FACTOR) } else { MIN_FACTOR };
                h = h_try * factor.min(1.0);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
