//! Gauss-Hermite rules for averaging over a Gaussian detuning.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights for E[f(X)], X ~ N(0, 1). Weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub-Welsch on the probabilists' Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature order must be positive");
        let jacobi = DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { (i.max(j) as f64).sqrt() } else { 0.0 });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1 / total).collect() }
    }

    /// E[f(σZ)] for Z ~ N(0, 1).
    pub fn average<F: FnMut(f64) -> f64>(&self, sigma: f64, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(sigma * x)).sum()
    }

    /// Scaled points (σ·xᵢ, wᵢ).
    pub fn points(&self, sigma: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (sigma * x, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rule_is_exact() {
        let q = GaussHermite::new(2);
        assert!((q.nodes[0] + 1.0).abs() < 1e-14 && (q.nodes[1] - 1.0).abs() < 1e-14);
        assert!((q.weights[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn gaussian_moments() {
        let q = GaussHermite::new(10);
        let s = 2.5;
        assert!((q.average(s, |x| x * x) - s * s).abs() < 1e-12);
        assert!((q.average(s, |x| x.powi(4)) - 3.0 * s.powi(4)).abs() < 1e-10);
        assert!(q.average(s, |x| x.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn characteristic_function() {
        // E[cos(aX)] = exp(−a²σ²/2) over the range used by Ramsey scans.
        let q = GaussHermite::new(64);
        let sigma = 2f64.sqrt() / 1.3;
        for tau in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let got = q.average(sigma, |d| (d * tau).cos());
            let expected = (-(tau / 1.3f64).powi(2)).exp();
            assert!((got - expected).abs() < 1e-10, "tau={tau}: {got} vs {expected}");
        }
    }
}
