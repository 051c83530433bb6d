//! Simulation and analysis toolkit for the negatively charged tin-vacancy
//! (SnV) spin qubit in diamond.
//!
//! The crate is organised bottom-up:
//!
//! * [`levels`] builds and diagonalises the ground/excited 4×4 Hamiltonians and
//!   derives optical transition strengths and the branching ratio.
//! * [`lindblad`] is a small dense Lindblad master-equation engine (adaptive
//!   Runge-Kutta evolution, exact segment propagators, steady states).
//! * [`raman`] maps optical drive settings onto effective two-level and
//!   lambda-system quantities.
//! * [`protocols`] simulates every pulse sequence (CPT, ODMR, Rabi, Ramsey,
//!   dynamical decoupling, T1, initialization) on top of the engine.
//! * [`fitting`] is a Levenberg-Marquardt engine plus the model library used to
//!   analyse simulated scans.
//!
//! Configuration values use laboratory units (GHz, MHz, nW, μs, T). Internally
//! every Hamiltonian is an angular frequency in rad/s and every time is in
//! seconds; see [`units`].

// Negated comparisons below reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod device;
pub mod error;
pub mod fitting;
pub mod levels;
pub mod lindblad;
pub mod protocols;
pub mod quadrature;
pub mod raman;
pub mod units;

pub use device::{BField, DeviceParams};
pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix of runtime dimension.
pub type CMatrix = nalgebra::DMatrix<C64>;
