#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use snv_core::lindblad::{unvectorize, vectorize, CollapseOperator, DensityMatrix, LindbladSystem};
use snv_core::{CMatrix, C64};

fn random_complex<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
}

/// Random Hermitian H and up to three collapse operators on dimension 2–4.
pub fn random_system<R: Rng>(rng: &mut R) -> LindbladSystem {
    let n = rng.random_range(2..=4);
    let a = random_complex(rng, n, 1.0);
    let h = (&a + a.adjoint()).scale(0.5);
    let k = rng.random_range(1..=3);
    let collapses = (0..k).map(|i| CollapseOperator::new(format!("c{i}"), random_complex(rng, n, 0.6))).collect();
    LindbladSystem::new(h, collapses).unwrap()
}

/// Random mixed state of dimension `n`: A A† / Tr.
pub fn random_state<R: Rng>(rng: &mut R, n: usize) -> DensityMatrix {
    let a = random_complex(rng, n, 1.0);
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m.unscale(tr.re)).unwrap()
}

/// exp(L·t) applied to ρ by scaling and squaring of a Taylor series,
/// independent of the engine's propagator.
pub fn oracle_propagate(sys: &LindbladSystem, rho: &DensityMatrix, t: f64) -> CMatrix {
    let l = sys.liouvillian().scale(t);
    let norm = l.norm();
    let squarings = (norm.log2().ceil().max(0.0) as u32) + 4;
    let a = l.unscale(2f64.powi(squarings as i32));
    let dim = a.nrows();
    let mut term = CMatrix::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a / C64::from(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    unvectorize(&(sum * vectorize(rho.matrix())), rho.dim())
}
