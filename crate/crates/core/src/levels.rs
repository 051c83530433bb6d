//! Orbital and spin level structure of the SnV ground and excited manifolds.
//!
//! Each manifold is a 4×4 Hamiltonian on orbital ⊗ spin (see
//! [`units::basis`]) made of spin-orbit, parallel and perpendicular spin
//! Zeeman, and Jahn-Teller/strain terms. Orbital Zeeman is neglected. All
//! matrices are in rad/s.

use std::fmt::Write as _;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::units::{self, basis};
use crate::C64;

/// Orbital-only Jahn-Teller/strain term `[[a, c], [c, b]]` in the
/// {e₊, e₋} basis, in GHz.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JahnTellerStrain {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl JahnTellerStrain {
    pub fn symmetric(c: f64) -> Self {
        Self { a: 0.0, b: 0.0, c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    Ground,
    Excited,
}

impl Manifold {
    /// State labels indexed by the spin-orbit basis vector each eigenstate
    /// connects to at zero field and zero strain.
    fn labels(self) -> [&'static str; 4] {
        // basis order: e+ up, e+ down, e- up, e- down
        match self {
            Manifold::Ground => ["4", "1", "2", "3"],
            Manifold::Excited => ["D", "A", "B", "C"],
        }
    }
}

/// Which manifold carries the strain term in [`branching_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrainPlacement {
    Ground,
    Excited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian4 {
    matrix: Matrix4<C64>,
    /// Spin-orbit splitting used to build the matrix (rad/s), zero if unknown.
    lambda_so: f64,
    manifold: Manifold,
}

impl Hamiltonian4 {
    /// Wraps an arbitrary matrix; rejects non-Hermitian input.
    pub fn from_matrix(matrix: Matrix4<C64>, manifold: Manifold) -> Result<Self> {
        check_hermitian(&matrix)?;
        Ok(Self { matrix, lambda_so: 0.0, manifold })
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.matrix
    }

    pub fn lambda_so(&self) -> f64 {
        self.lambda_so
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }
}

fn check_hermitian(m: &Matrix4<C64>) -> Result<()> {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let deviation = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if deviation > 1e-12 * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn build(params: &DeviceParams, strain: &JahnTellerStrain, manifold: Manifold) -> Result<Hamiltonian4> {
    params.validate()?;
    let lambda = units::ghz(match manifold {
        Manifold::Ground => params.lambda_so_ground_ghz,
        Manifold::Excited => params.lambda_so_excited_ghz,
    });
    let gyro = units::ghz(params.gyro_e_ghz_per_t);
    let bz = params.b_field.parallel();
    let bx = params.b_field.perpendicular();

    let id2 = Matrix2::<C64>::identity();
    let spin_z = Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
    // B₋ = Bx − iBy on the ↑↓ element, B₊ on ↓↑; By = 0 here.
    let spin_perp = Matrix2::new(c(0.0, 0.0), c(bx, 0.0), c(bx, 0.0), c(0.0, 0.0));
    let orbital_z = spin_z;
    let jt = Matrix2::new(
        c(units::ghz(strain.a), 0.0),
        c(units::ghz(strain.c), 0.0),
        c(units::ghz(strain.c), 0.0),
        c(units::ghz(strain.b), 0.0),
    );

    let h_so = orbital_z.kronecker(&spin_z) * c(lambda / 2.0, 0.0);
    let h_zpar = id2.kronecker(&spin_z) * c(gyro * bz / 2.0, 0.0);
    let h_zperp = id2.kronecker(&spin_perp) * c(gyro / 2.0, 0.0);
    let h_jt = jt.kronecker(&id2);

    let matrix = h_so + h_zpar + h_zperp + h_jt;
    check_hermitian(&matrix)?;
    Ok(Hamiltonian4 { matrix, lambda_so: lambda, manifold })
}

/// Ground-manifold Hamiltonian H_SO + H_Z∥ + H_Z⊥ + H_JT.
pub fn build_ground_hamiltonian(params: &DeviceParams, strain: &JahnTellerStrain) -> Result<Hamiltonian4> {
    build(params, strain, Manifold::Ground)
}

/// Excited-manifold Hamiltonian; same structure with the excited spin-orbit
/// splitting.
pub fn build_excited_hamiltonian(params: &DeviceParams, strain: &JahnTellerStrain) -> Result<Hamiltonian4> {
    build(params, strain, Manifold::Excited)
}

/// Sorted eigenpairs with labels assigned by maximum overlap with the
/// spin-orbit eigenstates.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    /// Ascending, rad/s.
    pub eigenvalues: [f64; 4],
    /// Orthonormal eigenvectors as columns, same order as `eigenvalues`.
    pub eigenvectors: Matrix4<C64>,
    pub labels: [&'static str; 4],
    pub manifold: Manifold,
    pub lambda_so: f64,
}

impl EigenSystem {
    fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn state(&self, label: &str) -> Option<Vector4<C64>> {
        self.index_of(label).map(|i| self.eigenvectors.column(i).into_owned())
    }

    pub fn energy(&self, label: &str) -> Option<f64> {
        self.index_of(label).map(|i| self.eigenvalues[i])
    }
}

pub fn diagonalize(h: &Hamiltonian4) -> Result<EigenSystem> {
    check_hermitian(&h.matrix)?;
    let eig = SymmetricEigen::new(h.matrix);

    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut eigenvalues = [0.0; 4];
    let mut eigenvectors = Matrix4::<C64>::zeros();
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = eig.eigenvalues[src];
        let mut v = eig.eigenvectors.column(src).into_owned();
        // Fix the global phase: largest component real and positive.
        let k = (0..4).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
        let phase = v[k] / v[k].norm();
        v /= phase;
        eigenvectors.set_column(dst, &v);
    }

    // Greedy maximum-overlap assignment against the bare basis states.
    let names = h.manifold.labels();
    let mut labels = [""; 4];
    let mut used_state = [false; 4];
    let mut used_basis = [false; 4];
    for _ in 0..4 {
        let mut best = (0, 0, -1.0);
        for i in (0..4).filter(|&i| !used_state[i]) {
            for k in (0..4).filter(|&k| !used_basis[k]) {
                let w = eigenvectors[(k, i)].norm_sqr();
                if w > best.2 {
                    best = (i, k, w);
                }
            }
        }
        used_state[best.0] = true;
        used_basis[best.1] = true;
        labels[best.0] = names[best.1];
    }

    Ok(EigenSystem { eigenvalues, eigenvectors, labels, manifold: h.manifold, lambda_so: h.lambda_so })
}

/// Orbital dipole operators in the {e₊, e₋} basis; they act as identity on spin.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleOperators {
    pub p_x: Matrix2<C64>,
    pub p_y: Matrix2<C64>,
    pub p_z: Matrix2<C64>,
}

impl DipoleOperators {
    pub fn snv() -> Self {
        let z = c(0.0, 0.0);
        Self {
            p_x: Matrix2::new(z, c(1.0, 0.0), c(1.0, 0.0), z),
            p_y: Matrix2::new(z, c(0.0, -1.0), c(0.0, 1.0), z),
            p_z: Matrix2::new(c(2.0, 0.0), z, z, c(2.0, 0.0)),
        }
    }
}

impl Default for DipoleOperators {
    fn default() -> Self {
        Self::snv()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub name: &'static str,
    /// Optical frequency relative to the zero-field, zero-strain A1 line (GHz).
    pub freq_offset_ghz: f64,
    /// |⟨excited|p̂|ground⟩|² summed over x, y, z.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pub transitions: Vec<Transition>,
}

impl TransitionTable {
    pub fn get(&self, name: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.name == name)
    }

    pub fn strength(&self, name: &str) -> f64 {
        self.get(name).map_or(0.0, |t| t.strength)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("transition,freq_offset_GHz,strength\n");
        for t in &self.transitions {
            let _ = writeln!(out, "{},{:.9},{:.9e}", t.name, t.freq_offset_ghz, t.strength);
        }
        out
    }
}

/// Fermi-golden-rule strengths of A1, A2, B1 and B2.
pub fn transition_strengths(ground: &EigenSystem, excited: &EigenSystem, dip: &DipoleOperators) -> TransitionTable {
    let id2 = Matrix2::<C64>::identity();
    let ops = [dip.p_x.kronecker(&id2), dip.p_y.kronecker(&id2), dip.p_z.kronecker(&id2)];
    let reference = -excited.lambda_so / 2.0 + ground.lambda_so / 2.0;

    let pairs = [("A1", "A", "1"), ("A2", "A", "2"), ("B1", "B", "1"), ("B2", "B", "2")];
    let transitions = pairs
        .iter()
        .filter_map(|&(name, e, g)| {
            let ve = excited.state(e)?;
            let vg = ground.state(g)?;
            let strength = ops.iter().map(|op| (ve.adjoint() * op * vg)[(0, 0)].norm_sqr()).sum();
            let freq = excited.energy(e)? - ground.energy(g)? - reference;
            Some(Transition { name, freq_offset_ghz: units::to_ghz(freq), strength })
        })
        .collect();
    TransitionTable { transitions }
}

/// η = strength(A1)/strength(A2) from full diagonalisation of both
/// manifolds. Returns `f64::INFINITY` when the spin-flipping transition is
/// forbidden to within 1e-30 of A1.
pub fn branching_ratio(params: &DeviceParams, strain: &JahnTellerStrain, place: StrainPlacement) -> Result<f64> {
    let none = JahnTellerStrain::default();
    let (sg, se) = match place {
        StrainPlacement::Ground => (strain, &none),
        StrainPlacement::Excited => (&none, strain),
    };
    let ground = diagonalize(&build_ground_hamiltonian(params, sg)?)?;
    let excited = diagonalize(&build_excited_hamiltonian(params, se)?)?;
    let table = transition_strengths(&ground, &excited, &DipoleOperators::snv());
    Ok(ratio(table.strength("A1"), table.strength("A2")))
}

fn ratio(a1: f64, a2: f64) -> f64 {
    if a2 < 1e-30 * a1 {
        f64::INFINITY
    } else {
        a1 / a2
    }
}

/// First-order estimate η ≈ 8λ_SO²/(γ_e B₊)² for the ground manifold.
pub fn branching_ratio_perturbative(params: &DeviceParams) -> f64 {
    let lambda = params.lambda_so_ground_ghz;
    let gb = params.gyro_e_ghz_per_t * params.b_field.perpendicular();
    if gb == 0.0 {
        return f64::INFINITY;
    }
    8.0 * lambda * lambda / (gb * gb)
}

/// Symmetric strain `c` (GHz, with a = b = 0) that gives the requested
/// branching ratio. η decreases monotonically with |c|, so this bisects.
pub fn calibrate_strain(params: &DeviceParams, target_eta: f64, place: StrainPlacement) -> Result<f64> {
    let eta_at = |c: f64| branching_ratio(params, &JahnTellerStrain::symmetric(c), place);
    if !(target_eta.is_finite() && target_eta >= 1.0) {
        return Err(Error::InvalidParameter { name: "target_eta", reason: format!("{target_eta}") });
    }
    if eta_at(0.0)? <= target_eta {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while eta_at(hi)? > target_eta {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NonPhysical(format!("no strain below 10 THz reaches eta = {target_eta}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if eta_at(mid)? > target_eta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Microwave matrix element ⟨1|H_MW|2⟩ (dimensionless, up to the drive
/// amplitude) together with its small-strain approximation 2c/λ_SO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwRabiElement {
    pub exact: f64,
    pub approx: f64,
}

pub fn mw_rabi_element(strain: &JahnTellerStrain, lambda_so_ghz: f64) -> MwRabiElement {
    let JahnTellerStrain { a, b, c } = *strain;
    let l = lambda_so_ghz;
    let d1 = -a + b + l;
    let d2 = a - b + l;
    let exact = 2.0 * c * (1.0 / (d1 + (4.0 * c * c + d1 * d1).sqrt()) + 1.0 / (d2 + (4.0 * c * c + d2 * d2).sqrt()));
    MwRabiElement { exact, approx: 2.0 * c / l }
}

/// Labels of the spin-orbit basis vector each ground label maps onto.
pub fn ground_basis_index(label: &str) -> Option<usize> {
    match label {
        "1" => Some(basis::E_PLUS_DOWN),
        "2" => Some(basis::E_MINUS_UP),
        "3" => Some(basis::E_MINUS_DOWN),
        "4" => Some(basis::E_PLUS_UP),
        _ => None,
    }
}

/// Qubit transition frequency ω_e = E₂ − E₁ of the ground manifold (rad/s).
pub fn qubit_frequency(params: &DeviceParams, strain: &JahnTellerStrain) -> Result<f64> {
    let g = diagonalize(&build_ground_hamiltonian(params, strain)?)?;
    let e1 = g.energy("1").ok_or_else(|| Error::NonPhysical("state |1> not found".into()))?;
    let e2 = g.energy("2").ok_or_else(|| Error::NonPhysical("state |2> not found".into()))?;
    Ok(e2 - e1)
}
