//! Emitter parameters shared by every module.

use crate::error::{ensure_positive, Error, Result};
use crate::units;

/// Static magnetic field, given as magnitude and polar angle from the SnV
/// symmetry axis. The azimuth is fixed to the x axis, so `B₊ = B_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BField {
    pub magnitude_t: f64,
    pub polar_deg: f64,
}

impl BField {
    pub fn new(magnitude_t: f64, polar_deg: f64) -> Self {
        Self { magnitude_t, polar_deg }
    }

    pub fn parallel(&self) -> f64 {
        self.magnitude_t * self.polar_deg.to_radians().cos()
    }

    pub fn perpendicular(&self) -> f64 {
        self.magnitude_t * self.polar_deg.to_radians().sin()
    }
}

/// Physical constants and emitter parameters, in laboratory units.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    /// Ground-state spin-orbit splitting (GHz).
    pub lambda_so_ground_ghz: f64,
    /// Excited-state spin-orbit splitting (GHz).
    pub lambda_so_excited_ghz: f64,
    /// Excited-state relaxation rate Γ/2π (MHz).
    pub gamma_mhz: f64,
    /// Optical saturation power of the spin-cycling transition (nW).
    pub p_sat_nw: f64,
    /// Branching ratio between spin-cycling and spin-flipping decay.
    pub eta: f64,
    /// Electron gyromagnetic ratio (GHz/T).
    pub gyro_e_ghz_per_t: f64,
    /// Inhomogeneous dephasing time (μs).
    pub t2_star_us: f64,
    /// Hyperfine constant (MHz).
    pub hyperfine_a_mhz: f64,
    pub b_field: BField,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            lambda_so_ground_ghz: 850.0,
            lambda_so_excited_ghz: 3000.0,
            gamma_mhz: 35.0,
            p_sat_nw: 4.6,
            eta: 80.0,
            gyro_e_ghz_per_t: units::GYRO_E_GHZ_PER_T,
            t2_star_us: 1.3,
            hyperfine_a_mhz: 42.6,
            b_field: BField::new(0.2, 54.7),
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("lambda_so_ground", self.lambda_so_ground_ghz)?;
        ensure_positive("lambda_so_excited", self.lambda_so_excited_ghz)?;
        ensure_positive("gamma", self.gamma_mhz)?;
        ensure_positive("p_sat", self.p_sat_nw)?;
        ensure_positive("gyro_e", self.gyro_e_ghz_per_t)?;
        ensure_positive("t2_star", self.t2_star_us)?;
        ensure_positive("hyperfine_a", self.hyperfine_a_mhz)?;
        if !(self.eta.is_finite() && self.eta >= 1.0) {
            return Err(Error::InvalidParameter { name: "eta", reason: format!("must be >= 1, got {}", self.eta) });
        }
        let b = self.b_field;
        if !(b.magnitude_t.is_finite() && b.magnitude_t >= 0.0) {
            return Err(Error::InvalidParameter { name: "b_field", reason: format!("magnitude must be >= 0, got {}", b.magnitude_t) });
        }
        if !(0.0..=180.0).contains(&b.polar_deg) {
            return Err(Error::InvalidParameter {
                name: "b_polar",
                reason: format!("polar angle must lie in [0, 180] deg, got {}", b.polar_deg),
            });
        }
        Ok(())
    }

    /// Γ in rad/s.
    pub fn gamma(&self) -> f64 {
        units::mhz(self.gamma_mhz)
    }

    /// T2* in s.
    pub fn t2_star(&self) -> f64 {
        units::us(self.t2_star_us)
    }

    /// Hyperfine constant A in rad/s.
    pub fn hyperfine_a(&self) -> f64 {
        units::mhz(self.hyperfine_a_mhz)
    }

    /// Acyclicity f = 1/(1+η) of the lambda scheme.
    pub fn acyclicity(&self) -> f64 {
        1.0 / (1.0 + self.eta)
    }

    /// Saturation parameter s = p/p_sat.
    pub fn saturation(&self, power_nw: f64) -> f64 {
        power_nw / self.p_sat_nw
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        DeviceParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut d = DeviceParams { eta: 0.5, ..Default::default() };
        assert!(d.validate().is_err());
        d.eta = 80.0;
        d.b_field.polar_deg = 190.0;
        assert!(d.validate().is_err());
        d.b_field.polar_deg = 54.7;
        d.gamma_mhz = 0.0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn field_components() {
        let b = BField::new(0.2, 90.0);
        assert!(b.parallel().abs() < 1e-15);
        assert!((b.perpendicular() - 0.2).abs() < 1e-15);
    }
}
