//! Closed-form mapping from optical drive settings to effective qubit and
//! lambda-system quantities.
//!
//! Frequencies in the public structs are ordinary frequencies (MHz, so Ω/2π)
//! and scattering rates are plain rates (μs⁻¹). Every closed form is
//! evaluated with angular Γ, Δ and Ω.

use std::fmt::Write as _;

use crate::device::DeviceParams;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::units;
use crate::{CMatrix, C64};

/// One Raman drive segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanDriveParams {
    /// Single-photon detuning Δ/2π (MHz).
    pub delta_mhz: f64,
    /// Two-photon detuning δ/2π (MHz).
    pub two_photon_delta_mhz: f64,
    /// Power per sideband (nW).
    pub power_nw: f64,
    /// Drive phase φ (rad).
    pub phase: f64,
    /// Pulse duration (μs).
    pub duration_us: f64,
    /// Serrodyne frequency ω_S/2π (MHz).
    pub serrodyne_mhz: f64,
}

impl RamanDriveParams {
    pub fn new(delta_mhz: f64, power_nw: f64) -> Self {
        Self { delta_mhz, two_photon_delta_mhz: 0.0, power_nw, phase: 0.0, duration_us: 0.0, serrodyne_mhz: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("power", self.power_nw)?;
        ensure_non_negative("duration", self.duration_us)?;
        for (name, v) in [
            ("delta", self.delta_mhz),
            ("two_photon_delta", self.two_photon_delta_mhz),
            ("phase", self.phase),
            ("serrodyne", self.serrodyne_mhz),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: format!("must be finite, got {v}") });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTwoLevel {
    /// Ω/2π (MHz).
    pub rabi_mhz: f64,
    /// Γ_os (μs⁻¹).
    pub scatter_per_us: f64,
    /// Δ_AC/2π (MHz).
    pub ac_stark_diff_mhz: f64,
    pub t1_os_ms: f64,
    pub t2_os_ms: f64,
}

/// Optical Rabi rates of the two lambda legs. `omega1` couples |↓⟩ through
/// the spin-conserving transition and is the stronger leg:
/// omega1/√(1−f) = omega2/√f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaParams {
    pub omega1_mhz: f64,
    pub omega2_mhz: f64,
    pub gamma_mhz: f64,
    pub f: f64,
}

impl LambdaParams {
    /// Splits a common scale Ω₀ into the two legs: Ω₁ = √(1−f)Ω₀, Ω₂ = √f Ω₀.
    pub fn from_scale(scale_mhz: f64, gamma_mhz: f64, eta: f64) -> Self {
        let f = 1.0 / (1.0 + eta);
        Self { omega1_mhz: (1.0 - f).sqrt() * scale_mhz, omega2_mhz: f.sqrt() * scale_mhz, gamma_mhz, f }
    }

    /// Decay rates (rad/s) from |E⟩ into |↓⟩ and |↑⟩.
    pub fn decay_rates(&self) -> (f64, f64) {
        let gamma = units::mhz(self.gamma_mhz);
        ((1.0 - self.f) * gamma, self.f * gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scattering {
    /// Γ_os (μs⁻¹).
    pub gamma_os_per_us: f64,
    /// η/Γ_os (ms), infinite when Γ_os = 0.
    pub t1_os_ms: f64,
    /// 1/Γ_os (ms), infinite when Γ_os = 0.
    pub t2_os_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcStark {
    /// Ω₁/2π (MHz).
    pub omega1_mhz: f64,
    pub shift1_mhz: f64,
    pub shift2_mhz: f64,
    /// Δ_AC,1 − Δ_AC,2 (MHz).
    pub diff_mhz: f64,
}

fn nonzero_detuning(drive: &RamanDriveParams) -> Result<f64> {
    drive.validate()?;
    if drive.delta_mhz == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    Ok(units::mhz(drive.delta_mhz.abs()))
}

/// True when Δ > √s·Γ, where the adiabatic-elimination formulas hold.
pub fn large_detuning_valid(drive: &RamanDriveParams, dev: &DeviceParams) -> bool {
    let s = dev.saturation(drive.power_nw);
    units::mhz(drive.delta_mhz.abs()) > s.sqrt() * dev.gamma()
}

/// Ω/2π (MHz) = (1/2π)·sΓ²/(4√η·Δ).
pub fn effective_rabi_rate(drive: &RamanDriveParams, dev: &DeviceParams) -> Result<f64> {
    let delta = nonzero_detuning(drive)?;
    dev.validate()?;
    let s = dev.saturation(drive.power_nw);
    let gamma = dev.gamma();
    Ok(units::to_mhz(s * gamma * gamma / (4.0 * dev.eta.sqrt() * delta)))
}

/// Γ_os = sΓ³/(8Δ²) with T2,os = 1/Γ_os and T1,os = η/Γ_os.
pub fn scattering_rate(drive: &RamanDriveParams, dev: &DeviceParams) -> Result<Scattering> {
    let delta = nonzero_detuning(drive)?;
    dev.validate()?;
    let s = dev.saturation(drive.power_nw);
    let gamma = dev.gamma();
    let rate = s * gamma.powi(3) / (8.0 * delta * delta);
    let (t1, t2) = if rate > 0.0 { (dev.eta / rate * 1e3, 1e3 / rate) } else { (f64::INFINITY, f64::INFINITY) };
    Ok(Scattering { gamma_os_per_us: units::to_per_us(rate), t1_os_ms: t1, t2_os_ms: t2 })
}

/// Lambda-leg Rabi rates for a drive: Ω₁ = Γ√(s/2), Ω₂ = Ω₁/√η, so that
/// Ω₁Ω₂/(2Δ) reproduces [`effective_rabi_rate`].
pub fn lambda_params(drive: &RamanDriveParams, dev: &DeviceParams) -> Result<LambdaParams> {
    drive.validate()?;
    dev.validate()?;
    let s = dev.saturation(drive.power_nw);
    let omega1 = units::to_mhz(dev.gamma() * (s / 2.0).sqrt());
    Ok(LambdaParams { omega1_mhz: omega1, omega2_mhz: omega1 / dev.eta.sqrt(), gamma_mhz: dev.gamma_mhz, f: dev.acyclicity() })
}

/// Differential AC Stark shift from a known two-photon Rabi rate.
///
/// Ω₁ = √(2Δ₁Ω√η); each leg shifts by (√(Ω₁² + Δᵢ²) − Δᵢ)/2 with
/// Δ₂ = Δ₁ + splitting.
pub fn ac_stark_from_rabi(rabi_mhz: f64, eta: f64, delta1_mhz: f64, splitting_mhz: f64) -> Result<AcStark> {
    ensure_non_negative("rabi", rabi_mhz)?;
    ensure_positive("delta", delta1_mhz)?;
    if !(eta.is_finite() && eta >= 1.0) {
        return Err(Error::InvalidParameter { name: "eta", reason: format!("must be >= 1, got {eta}") });
    }
    let omega1 = (2.0 * delta1_mhz * rabi_mhz * eta.sqrt()).sqrt();
    let shift = |d: f64| ((omega1 * omega1 + d * d).sqrt() - d) / 2.0;
    let shift1 = shift(delta1_mhz);
    let shift2 = shift(delta1_mhz + splitting_mhz);
    Ok(AcStark { omega1_mhz: omega1, shift1_mhz: shift1, shift2_mhz: shift2, diff_mhz: shift1 - shift2 })
}

/// [`ac_stark_from_rabi`] with Ω taken from the drive.
pub fn ac_stark(drive: &RamanDriveParams, dev: &DeviceParams, splitting_mhz: f64) -> Result<AcStark> {
    let rabi = effective_rabi_rate(drive, dev)?;
    if drive.delta_mhz < 0.0 {
        return Err(Error::InvalidParameter { name: "delta", reason: "AC Stark estimate needs delta > 0".into() });
    }
    ac_stark_from_rabi(rabi, dev.eta, drive.delta_mhz, splitting_mhz)
}

/// All effective two-level quantities of a drive.
pub fn effective_two_level(drive: &RamanDriveParams, dev: &DeviceParams, splitting_mhz: f64) -> Result<EffectiveTwoLevel> {
    let rabi = effective_rabi_rate(drive, dev)?;
    let sc = scattering_rate(drive, dev)?;
    let ac = if drive.delta_mhz > 0.0 { ac_stark(drive, dev, splitting_mhz)?.diff_mhz } else { 0.0 };
    Ok(EffectiveTwoLevel {
        rabi_mhz: rabi,
        scatter_per_us: sc.gamma_os_per_us,
        ac_stark_diff_mhz: ac,
        t1_os_ms: sc.t1_os_ms,
        t2_os_ms: sc.t2_os_ms,
    })
}

/// H = (Ω/2)(cos φ σx + sin φ σy) + (δ/2)σz in the qubit basis (|↑⟩, |↓⟩).
/// Ω and δ in rad/s.
pub fn two_level_hamiltonian(omega: f64, delta: f64, phase: f64) -> CMatrix {
    let off = C64::from_polar(omega / 2.0, -phase);
    CMatrix::from_row_slice(2, 2, &[C64::new(delta / 2.0, 0.0), off, off.conj(), C64::new(-delta / 2.0, 0.0)])
}

/// π/2 gate fidelity F = ½(1 + e^{−1/Q}), Q = (16/9)Ω/max(Γ_os, 1/T2*).
/// Ω in rad/s, Γ_os in s⁻¹, T2* in s.
pub fn gate_fidelity(omega: f64, gamma_os: f64, t2_star: f64) -> f64 {
    let gamma_tot = gamma_os.max(1.0 / t2_star);
    if gamma_tot <= 0.0 {
        return 1.0;
    }
    let q = 16.0 / 9.0 * omega / gamma_tot;
    if q <= 0.0 {
        return 0.5;
    }
    0.5 * (1.0 + (-1.0 / q).exp())
}

/// Single-photon detuning Δ/2π (MHz) where Γ_os = 1/T2*: √(sΓ³T2*/8).
pub fn optimal_detuning_mhz(s: f64, dev: &DeviceParams) -> f64 {
    units::to_mhz((s * dev.gamma().powi(3) * dev.t2_star() / 8.0).sqrt())
}

/// Gate fidelity over an (s, Δ) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityMap {
    pub saturation: Vec<f64>,
    pub delta_mhz: Vec<f64>,
    /// Row-major: `fidelity[i * delta.len() + j]` is (sᵢ, Δⱼ).
    pub fidelity: Vec<f64>,
}

impl FidelityMap {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.fidelity[i * self.delta_mhz.len() + j]
    }

    /// Index of the best detuning for saturation row `i`.
    pub fn argmax_delta(&self, i: usize) -> usize {
        (0..self.delta_mhz.len()).max_by(|&a, &b| self.at(i, a).total_cmp(&self.at(i, b))).unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,delta_MHz,fidelity\n");
        for (i, s) in self.saturation.iter().enumerate() {
            for (j, d) in self.delta_mhz.iter().enumerate() {
                let _ = writeln!(out, "{s},{d},{:.9}", self.at(i, j));
            }
        }
        out
    }
}

pub fn fidelity_map(saturation: &[f64], delta_mhz: &[f64], dev: &DeviceParams) -> Result<FidelityMap> {
    dev.validate()?;
    let mut fidelity = Vec::with_capacity(saturation.len() * delta_mhz.len());
    for &s in saturation {
        ensure_non_negative("s", s)?;
        for &d in delta_mhz {
            let drive = RamanDriveParams::new(d, s * dev.p_sat_nw);
            let omega = units::mhz(effective_rabi_rate(&drive, dev)?);
            let gamma_os = units::per_us(scattering_rate(&drive, dev)?.gamma_os_per_us);
            fidelity.push(gate_fidelity(omega, gamma_os, dev.t2_star()));
        }
    }
    Ok(FidelityMap { saturation: saturation.to_vec(), delta_mhz: delta_mhz.to_vec(), fidelity })
}

/// Optical pumping rate into the dark spin state, (Γ/2)·s/(1+s)/η, in s⁻¹.
pub fn init_rate(power_nw: f64, dev: &DeviceParams) -> f64 {
    let s = dev.saturation(power_nw.max(0.0));
    dev.gamma() / 2.0 * s / (1.0 + s) / dev.eta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitFidelity {
    /// Residual bright-state fraction ε.
    pub epsilon: f64,
    /// 1 − ε/2.
    pub fidelity: f64,
}

/// Initialization fidelity from the first and steady-state fluorescence
/// bins of a pumping trace.
pub fn init_fidelity(first_bin: f64, steady: f64, background: f64) -> Result<InitFidelity> {
    if !(first_bin > background) {
        return Err(Error::InvalidParameter { name: "first_bin", reason: format!("must exceed background ({first_bin} <= {background})") });
    }
    let epsilon = (steady - background) / (first_bin - background);
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::NonPhysical(format!("bright fraction {epsilon} outside [0, 1]")));
    }
    Ok(InitFidelity { epsilon, fidelity: 1.0 - epsilon / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dev() -> DeviceParams {
        DeviceParams::default()
    }

    #[test]
    fn rabi_rate_examples() {
        let d = dev();
        assert_eq!(effective_rabi_rate(&RamanDriveParams::new(1200.0, 0.0), &d).unwrap(), 0.0);
        let r = effective_rabi_rate(&RamanDriveParams::new(1200.0, 650.0), &d).unwrap();
        assert!((r - 3.9).abs() < 0.2, "{r}");
        // Direct evaluation: (650/4.6)·(2π·35)²/(4·√80·2π·1200)/2π MHz.
        let direct = (650.0 / 4.6) * 35.0 * 35.0 / (4.0 * 80f64.sqrt() * 1200.0);
        assert!((r - direct).abs() < 1e-12);
        assert!(matches!(effective_rabi_rate(&RamanDriveParams::new(0.0, 650.0), &d), Err(Error::ZeroDetuning)));
    }

    #[test]
    fn rabi_and_scattering_scale_with_power_and_detuning() {
        let d = dev();
        let a = RamanDriveParams::new(1200.0, 650.0);
        let b = RamanDriveParams::new(2400.0, 1300.0);
        let ra = effective_rabi_rate(&a, &d).unwrap();
        let rb = effective_rabi_rate(&b, &d).unwrap();
        assert!((ra - rb).abs() < 1e-12 * ra);
        let qa = ra / scattering_rate(&a, &d).unwrap().gamma_os_per_us;
        let qb = rb / scattering_rate(&b, &d).unwrap().gamma_os_per_us;
        assert!((qb / qa - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scattering_examples() {
        let d = dev();
        let sc = scattering_rate(&RamanDriveParams::new(1200.0, 650.0), &d).unwrap();
        assert!((sc.gamma_os_per_us - 3.3).abs() < 0.2, "{}", sc.gamma_os_per_us);
        let leak = scattering_rate(&RamanDriveParams::new(1200.0, 1.0), &d).unwrap();
        assert!((14.0..=18.0).contains(&leak.t1_os_ms), "{}", leak.t1_os_ms);
        assert!((0.17..=0.23).contains(&leak.t2_os_ms), "{}", leak.t2_os_ms);
        assert_eq!(leak.t1_os_ms / leak.t2_os_ms, d.eta);
        let zero = scattering_rate(&RamanDriveParams::new(1200.0, 0.0), &d).unwrap();
        assert_eq!(zero.gamma_os_per_us, 0.0);
        assert!(zero.t1_os_ms.is_infinite() && zero.t2_os_ms.is_infinite());
    }

    #[test]
    fn lambda_reduction_is_consistent() {
        let d = dev();
        for (delta, p) in [(1200.0, 650.0), (300.0, 260.0), (600.0, 40.0)] {
            let drive = RamanDriveParams::new(delta, p);
            let l = lambda_params(&drive, &d).unwrap();
            let from_legs = l.omega1_mhz * l.omega2_mhz / (2.0 * delta);
            let direct = effective_rabi_rate(&drive, &d).unwrap();
            assert!((from_legs / direct - 1.0).abs() < 1e-12);
            assert!((l.omega1_mhz / (1.0 - l.f).sqrt() - l.omega2_mhz / l.f.sqrt()).abs() < 1e-9 * l.omega1_mhz);
            assert!((l.f / (1.0 - l.f) - 1.0 / d.eta).abs() < 1e-15);
        }
    }

    #[test]
    fn ac_stark_examples() {
        let ac = ac_stark_from_rabi(1.4, 80.0, 300.0, 610.0).unwrap();
        assert!((ac.omega1_mhz - 87.0).abs() < 1.0, "{}", ac.omega1_mhz);
        assert!((ac.diff_mhz - 4.2).abs() < 0.2, "{}", ac.diff_mhz);
        let sym = ac_stark_from_rabi(1.4, 80.0, 300.0, 0.0).unwrap();
        assert_eq!(sym.diff_mhz, 0.0);
    }

    #[test]
    fn hamiltonian_phase_convention() {
        let h0 = two_level_hamiltonian(2.0, 0.6, 0.0);
        assert_eq!(h0[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(h0[(0, 0)], C64::new(0.3, 0.0));
        let hpi = two_level_hamiltonian(2.0, 0.0, std::f64::consts::PI);
        assert!((hpi[(0, 1)] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        let hy = two_level_hamiltonian(2.0, 0.0, std::f64::consts::FRAC_PI_2);
        assert!((hy[(0, 1)] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn opposite_pi_half_pulses_cancel() {
        let omega = 1.0;
        let t = std::f64::consts::FRAC_PI_2 / omega;
        let u = |phase: f64| (two_level_hamiltonian(omega, 0.0, phase) * C64::new(0.0, -t)).exp();
        let total = u(std::f64::consts::PI) * u(0.0);
        let down = crate::units::qubit::DOWN;
        assert!((total[(down, down)].norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gate_fidelity_examples() {
        let f = gate_fidelity(units::mhz(3.6), 7e6, 1.3e-6);
        assert!((f - 0.92).abs() < 0.01, "{f}");
        assert!((gate_fidelity(1e9, 0.0, 1e6) - 1.0).abs() < 1e-6);
        let mut last = 0.0;
        for k in 1..20 {
            let f = gate_fidelity(units::mhz(k as f64), 7e6, 1.3e-6);
            assert!(f > last);
            last = f;
        }
    }

    #[test]
    fn fidelity_map_ridge() {
        let d = dev();
        let deltas: Vec<f64> = (1..=400).map(|k| 25.0 * k as f64).collect();
        let sats = [1.0, 10.0, 100.0];
        let map = fidelity_map(&sats, &deltas, &d).unwrap();
        for (i, &s) in sats.iter().enumerate() {
            let best = deltas[map.argmax_delta(i)];
            assert!((best - optimal_detuning_mhz(s, &d)).abs() <= 25.0, "s={s}: {best}");
        }
        assert!(map.to_csv().starts_with("s,delta_MHz,fidelity\n"));
    }

    #[test]
    fn init_rate_examples() {
        let d = dev();
        assert_eq!(init_rate(0.0, &d), 0.0);
        let r = init_rate(d.p_sat_nw, &d);
        assert!((r - d.gamma() / (4.0 * d.eta)).abs() < 1e-9 * r);
        assert!((units::to_per_us(r) - 0.69).abs() < 0.01);
        let limit = d.gamma() / (2.0 * d.eta);
        assert!(init_rate(1e9, &d) < limit && init_rate(1e9, &d) > 0.999 * limit);
    }

    #[test]
    fn init_fidelity_examples() {
        let f = init_fidelity(14968.0, 281.0, 141.0).unwrap();
        assert!((f.epsilon - 0.0094).abs() < 0.0005);
        assert!((0.995..=0.996).contains(&f.fidelity));
        assert_eq!(init_fidelity(100.0, 10.0, 10.0).unwrap().fidelity, 1.0);
        assert_eq!(init_fidelity(100.0, 100.0, 10.0).unwrap().fidelity, 0.5);
        assert!(init_fidelity(10.0, 5.0, 10.0).is_err());
        assert!(init_fidelity(100.0, 200.0, 10.0).is_err());
    }
}
