//! Unit conventions and basis ordering.
//!
//! Configuration and reporting use laboratory units. Anything passed to a
//! Hamiltonian, a collapse operator or the master-equation engine is an
//! angular rate in rad/s, and times are seconds. Decay rates quoted in
//! "μs⁻¹" (scattering, dephasing) are plain rates, not multiplied by 2π.

use std::f64::consts::TAU;

/// Electron gyromagnetic ratio 2μ_B/h in GHz/T.
pub const GYRO_E_GHZ_PER_T: f64 = 27.992_490;

/// GHz → rad/s.
pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e9
}

/// MHz → rad/s.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// rad/s → GHz.
pub fn to_ghz(w: f64) -> f64 {
    w / (TAU * 1e9)
}

/// rad/s → MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / (TAU * 1e6)
}

/// μs → s.
pub fn us(t: f64) -> f64 {
    t * 1e-6
}

/// s → μs.
pub fn to_us(t: f64) -> f64 {
    t * 1e6
}

/// μs⁻¹ → s⁻¹.
pub fn per_us(r: f64) -> f64 {
    r * 1e6
}

/// s⁻¹ → μs⁻¹.
pub fn to_per_us(r: f64) -> f64 {
    r * 1e-6
}

/// Basis of the 4×4 orbital-spin Hamiltonians: orbital ⊗ spin with
/// orbital order {e₊, e₋} and spin order {↑, ↓}.
pub mod basis {
    pub const E_PLUS_UP: usize = 0;
    pub const E_PLUS_DOWN: usize = 1;
    pub const E_MINUS_UP: usize = 2;
    pub const E_MINUS_DOWN: usize = 3;
    pub const LABELS: [&str; 4] = ["e+ up", "e+ down", "e- up", "e- down"];
}

/// Qubit basis of the effective two-level models: index 0 is |↑⟩,
/// index 1 is |↓⟩, and σ_z|↓⟩ = −|↓⟩.
pub mod qubit {
    pub const UP: usize = 0;
    pub const DOWN: usize = 1;
}

/// Lambda-system basis of the three-level CPT model.
pub mod lambda {
    pub const DOWN: usize = 0;
    pub const UP: usize = 1;
    pub const EXCITED: usize = 2;
}
