use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("integration failed at t = {t_reached:.6e} s: {reason}")]
    IntegrationFailure { t_reached: f64, reason: String },

    #[error("steady state is not unique: null space has dimension {dimension}")]
    DegenerateSteadyState { dimension: usize },

    #[error("steady state requires at least one collapse operator")]
    NoDissipation,

    #[error("single-photon detuning is zero; use the three-level CPT model instead")]
    ZeroDetuning,

    #[error("non-physical value: {0}")]
    NonPhysical(String),

    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),

    #[error("fit failed: {0}")]
    Fit(#[from] crate::fitting::FitError),
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be finite and > 0, got {value}") })
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be finite and >= 0, got {value}") })
    }
}
