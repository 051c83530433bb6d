//! Dense Lindblad master-equation engine.
//!
//! dρ/dt = −i[H, ρ] + Σᵢ (cᵢ ρ cᵢ† − ½{cᵢ†cᵢ, ρ})
//!
//! Superoperators use column stacking: `vec(ρ)[i + n·j] = ρ[i, j]`, so that
//! `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

mod rk45;

use std::fmt::Write as _;

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

pub use rk45::EvolveOptions;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let rho = Self::new_unchecked(matrix)?;
        rho.check()?;
        Ok(rho)
    }

    /// Only checks that the matrix is square and non-empty.
    pub fn new_unchecked(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        Ok(Self { matrix })
    }

    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: k + 1 });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Ok(Self { matrix: m })
    }

    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let v = psi.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    /// Incoherent mixture Σ pₖ|k⟩⟨k|.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(populations.len(), populations.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn population(&self, k: usize) -> f64 {
        self.matrix[(k, k)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()).scale(0.5);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// Checks the density-matrix invariants at the library tolerances.
    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lmin:.3e}")));
        }
        Ok(())
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOperator {
    /// Units of √(rad/s).
    pub matrix: CMatrix,
    pub label: String,
}

impl CollapseOperator {
    pub fn new(label: impl Into<String>, matrix: CMatrix) -> Self {
        Self { matrix, label: label.into() }
    }

    /// √rate · op.
    pub fn with_rate(label: impl Into<String>, rate: f64, op: &CMatrix) -> Self {
        Self::new(label, op.scale(rate.max(0.0).sqrt()))
    }

    fn is_zero(&self) -> bool {
        self.matrix.iter().all(|z| *z == C64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladSystem {
    hamiltonian: CMatrix,
    collapses: Vec<CollapseOperator>,
    /// H − (i/2)Σ c†c
    h_eff: CMatrix,
}

impl LindbladSystem {
    pub fn new(hamiltonian: CMatrix, collapses: Vec<CollapseOperator>) -> Result<Self> {
        let n = hamiltonian.nrows();
        if hamiltonian.ncols() != n || n == 0 {
            return Err(Error::DimensionMismatch { expected: n, found: hamiltonian.ncols() });
        }
        let scale = max_abs(&hamiltonian).max(f64::MIN_POSITIVE);
        let deviation = max_abs(&(&hamiltonian - hamiltonian.adjoint()));
        if deviation > 1e-12 * scale {
            return Err(Error::NotHermitian { deviation });
        }
        let mut h_eff = hamiltonian.clone();
        for c in &collapses {
            if c.matrix.nrows() != n || c.matrix.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.matrix.nrows() });
            }
            h_eff -= (c.matrix.adjoint() * &c.matrix).scale(0.5) * C64::i();
        }
        Ok(Self { hamiltonian, collapses, h_eff })
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn collapses(&self) -> &[CollapseOperator] {
        &self.collapses
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// L(ρ) evaluated directly on the matrix. Assumes ρ is Hermitian.
    pub fn rhs(&self, rho: &CMatrix) -> CMatrix {
        let a = &self.h_eff * rho;
        let mut out = (&a - a.adjoint()) * C64::new(0.0, -1.0);
        for c in &self.collapses {
            out += &c.matrix * rho * c.matrix.adjoint();
        }
        out
    }

    /// The n²×n² Liouvillian in the column-stacking convention.
    pub fn liouvillian(&self) -> CMatrix {
        let n = self.dim();
        let id = CMatrix::identity(n, n);
        let mi = C64::new(0.0, -1.0);
        let mut l = (id.kronecker(&self.hamiltonian) - self.hamiltonian.transpose().kronecker(&id)) * mi;
        for c in &self.collapses {
            let cdc = c.matrix.adjoint() * &c.matrix;
            l += c.matrix.conjugate().kronecker(&c.matrix);
            l -= id.kronecker(&cdc).scale(0.5);
            l -= cdc.transpose().kronecker(&id).scale(0.5);
        }
        l
    }

    /// Exact segment propagator exp(L·dt) acting on vec(ρ).
    pub fn propagator(&self, dt: f64) -> CMatrix {
        (self.liouvillian() * C64::new(dt, 0.0)).exp()
    }
}

pub fn vectorize(rho: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// Applies a superoperator (e.g. a propagator product) to ρ. The result is
/// not re-validated.
pub fn apply_superoperator(superop: &CMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let n = rho.dim();
    if superop.nrows() != n * n || superop.ncols() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: superop.nrows() });
    }
    DensityMatrix::new_unchecked(unvectorize(&(superop * vectorize(rho.matrix())), n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    /// Seconds.
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub observables: Vec<(String, Vec<C64>)>,
}

impl EvolutionResult {
    /// Adds the trace Tr(ρ(t)·op) under `name`.
    pub fn with_observable(mut self, name: impl Into<String>, op: &CMatrix) -> Result<Self> {
        let values = self.states.iter().map(|s| expectation(s, op)).collect::<Result<Vec<_>>>()?;
        self.observables.push((name.into(), values));
        Ok(self)
    }

    pub fn observable(&self, name: &str) -> Option<&[C64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// Debug dump: one row per time with Re/Im of every entry, row-major.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, DensityMatrix::dim);
        let mut out = String::from("t_s");
        for i in 0..n {
            for j in 0..n {
                let _ = write!(out, ",re_{i}{j},im_{i}{j}");
            }
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.9e}");
            for i in 0..n {
                for j in 0..n {
                    let z = s.matrix()[(i, j)];
                    let _ = write!(out, ",{:.12e},{:.12e}", z.re, z.im);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Integrates the master equation and reports ρ at each requested time.
pub fn evolve(sys: &LindbladSystem, rho0: &DensityMatrix, times: &[f64]) -> Result<EvolutionResult> {
    evolve_with(sys, rho0, times, &EvolveOptions::default())
}

pub fn evolve_with(sys: &LindbladSystem, rho0: &DensityMatrix, times: &[f64], opts: &EvolveOptions) -> Result<EvolutionResult> {
    if rho0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: rho0.dim() });
    }
    rho0.check()?;
    if times.first().is_some_and(|&t| !(t >= 0.0)) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter { name: "times", reason: "must be non-negative and strictly increasing".into() });
    }
    let matrices = rk45::integrate(sys, rho0.matrix(), times, opts)?;
    let states = matrices.into_iter().map(|m| DensityMatrix { matrix: m }).collect();
    Ok(EvolutionResult { times: times.to_vec(), states, observables: Vec::new() })
}

/// Unique stationary state of the Liouvillian, normalised to unit trace.
pub fn steady_state(sys: &LindbladSystem) -> Result<DensityMatrix> {
    if sys.collapses.iter().all(CollapseOperator::is_zero) {
        return Err(Error::NoDissipation);
    }
    let n = sys.dim();
    let l = sys.liouvillian();
    let svd = l.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let dimension = svd.singular_values.iter().filter(|&&s| s <= 1e-11 * smax).count();
    if dimension > 1 {
        return Err(Error::DegenerateSteadyState { dimension });
    }

    // Swap the first equation for Tr ρ = 1.
    let mut a = l.clone();
    let mut b = DVector::<C64>::zeros(n * n);
    for col in 0..n * n {
        a[(0, col)] = C64::new(0.0, 0.0);
    }
    for k in 0..n {
        a[(0, k * (n + 1))] = C64::new(1.0, 0.0);
    }
    b[0] = C64::new(1.0, 0.0);
    let x = a.lu().solve(&b).ok_or_else(|| Error::NonPhysical("steady-state linear system is singular".into()))?;
    let rho = unvectorize(&x, n);
    let rho = (&rho + rho.adjoint()).scale(0.5);

    let lnorm = l.norm();
    let residual = (&l * vectorize(&rho)).norm();
    if residual > 1e-10 * lnorm {
        return Err(Error::NonPhysical(format!("steady-state residual {residual:.3e} exceeds tolerance")));
    }
    DensityMatrix::new(rho)
}

/// Tr(ρ·op).
pub fn expectation(rho: &DensityMatrix, op: &CMatrix) -> Result<C64> {
    let n = rho.dim();
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: op.nrows() });
    }
    Ok(rho.matrix().component_mul(&op.transpose()).sum())
}

/// Pauli and projector helpers for two-level systems (index 0 = |↑⟩).
pub mod pauli {
    use crate::{CMatrix, C64};

    fn m(entries: [C64; 4]) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &entries)
    }

    const Z: C64 = C64::new(0.0, 0.0);
    const ONE: C64 = C64::new(1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    pub fn sigma_x() -> CMatrix {
        m([Z, ONE, ONE, Z])
    }

    pub fn sigma_y() -> CMatrix {
        m([Z, -I, I, Z])
    }

    /// diag(1, −1): σ_z|↓⟩ = −|↓⟩.
    pub fn sigma_z() -> CMatrix {
        m([ONE, Z, Z, -ONE])
    }

    pub fn projector(dim: usize, k: usize) -> CMatrix {
        let mut p = CMatrix::zeros(dim, dim);
        p[(k, k)] = ONE;
        p
    }

    /// |i⟩⟨j| in dimension `dim`.
    pub fn ket_bra(dim: usize, i: usize, j: usize) -> CMatrix {
        let mut p = CMatrix::zeros(dim, dim);
        p[(i, j)] = ONE;
        p
    }
}

/// Real-valued convenience: Re Tr(ρ·op).
pub fn expectation_re(rho: &DensityMatrix, op: &CMatrix) -> Result<f64> {
    expectation(rho, op).map(|z| z.re)
}
