//! Optical pumping traces and the saturation of the pumping rate.

use rand_distr::{Distribution, Poisson};

use super::{point_rng, Axis, ScanMetadata, ScanResult};
use crate::device::DeviceParams;
use crate::error::{ensure_positive, Error, Result};
use crate::fitting::{least_squares, least_squares_with, models, Dataset, FitOptions, FitResult};
use crate::raman::init_rate;
use crate::units;

#[derive(Debug, Clone, PartialEq)]
pub struct InitTraceConfig {
    pub t_max_us: f64,
    pub points: usize,
    /// Counts per bin of the decaying part at t = 0.
    pub amplitude: f64,
    /// Counts per bin once pumped.
    pub background: f64,
    /// Draw Poisson counts instead of the expectation.
    pub shot_noise: bool,
    pub seed: u64,
}

impl Default for InitTraceConfig {
    fn default() -> Self {
        Self { t_max_us: 10.0, points: 200, amplitude: 2000.0, background: 40.0, shot_noise: false, seed: 1 }
    }
}

/// Fluorescence counts over (power nW, t μs).
#[derive(Debug, Clone, PartialEq)]
pub struct InitTraces {
    pub scan: ScanResult,
}

impl InitTraces {
    pub fn powers(&self) -> &[f64] {
        self.scan.x()
    }

    pub fn times(&self) -> &[f64] {
        &self.scan.axes[1].values
    }

    /// a·exp(−t/τ) + c for each power.
    pub fn fit_decays(&self) -> Result<Vec<FitResult>> {
        let t = self.times();
        (0..self.powers().len())
            .map(|i| {
                let y = self.scan.row(i);
                let a0 = y[0] - y[y.len() - 1];
                let c0 = y[y.len() - 1];
                let model = models::exp_decay().with_initials(&[a0, t[t.len() - 1] / 5.0, c0]);
                let data = Dataset::new(t.to_vec(), y.to_vec());
                Ok(least_squares(&model, &data)?)
            })
            .collect()
    }

    /// Fits every decay, then the pumping rate 1/τ (μs⁻¹) against power
    /// with Γ fixed. Returns the per-power fits and the saturation fit.
    pub fn fit_saturation(&self, gamma_mhz: f64) -> Result<(Vec<FitResult>, FitResult)> {
        let decays = self.fit_decays()?;
        let rates: Vec<f64> = decays.iter().map(|f| 1.0 / f.get("tau")).collect();
        let errs: Vec<f64> = decays.iter().map(|f| f.uncertainty("tau").unwrap_or(0.0) / f.get("tau").powi(2)).collect();
        let mut data = Dataset::new(self.powers().to_vec(), rates);
        if errs.iter().all(|&e| e > 0.0 && e.is_finite()) {
            data = data.with_sigma(errs);
        }
        let model = models::init_saturation(gamma_mhz);
        let fit = least_squares_with(&model, &data, &FitOptions::default())?;
        Ok((decays, fit))
    }
}

/// Fluorescence after the pumping pulse turns on, decaying at
/// [`init_rate`] for each power.
pub fn run_init_trace(powers_nw: &[f64], cfg: &InitTraceConfig, dev: &DeviceParams) -> Result<InitTraces> {
    dev.validate()?;
    ensure_positive("t_max", cfg.t_max_us)?;
    if cfg.points < 4 {
        return Err(Error::InvalidParameter { name: "points", reason: "need at least 4 time bins".into() });
    }
    let times: Vec<f64> = (0..cfg.points).map(|k| cfg.t_max_us * k as f64 / (cfg.points - 1) as f64).collect();
    let mut values = Vec::with_capacity(powers_nw.len() * times.len());
    for (i, &p) in powers_nw.iter().enumerate() {
        ensure_positive("power", p)?;
        let rate = units::to_per_us(init_rate(p, dev));
        let mut rng = point_rng(cfg.seed, i as u64);
        for &t in &times {
            let mean = cfg.amplitude * (-rate * t).exp() + cfg.background;
            let v = if cfg.shot_noise && mean > 0.0 {
                Poisson::new(mean).map_err(|e| Error::InvalidState(e.to_string()))?.sample(&mut rng)
            } else {
                mean
            };
            values.push(v);
        }
    }
    let n = values.len();
    let scan = ScanResult::new(
        vec![Axis::new("power", "nW", powers_nw.to_vec()), Axis::new("t", "us", times)],
        "counts",
        values,
        vec![0.0; n],
        ScanMetadata { device: dev.clone(), seed: cfg.seed, repetitions: 1 },
    )?;
    Ok(InitTraces { scan })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_single_power_recovers_pumping_time() {
        let dev = DeviceParams::default();
        let traces = run_init_trace(&[10.0], &InitTraceConfig::default(), &dev).unwrap();
        let fit = &traces.fit_decays().unwrap()[0];
        let expected = 1.0 / units::to_per_us(init_rate(10.0, &dev));
        assert!((fit.get("tau") / expected - 1.0).abs() < 1e-6);
    }

    #[test]
    fn poisson_counts_are_integers_and_reproducible() {
        let dev = DeviceParams::default();
        let cfg = InitTraceConfig { shot_noise: true, ..InitTraceConfig::default() };
        let a = run_init_trace(&[5.0, 20.0], &cfg, &dev).unwrap();
        let b = run_init_trace(&[5.0, 20.0], &cfg, &dev).unwrap();
        assert_eq!(a, b);
        assert!(a.scan.values.iter().all(|v| v.fract() == 0.0));
    }
}
