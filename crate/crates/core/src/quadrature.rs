//! Gauss quadrature rules built with the Golub-Welsch algorithm.

use nalgebra::DMatrix;

/// Nodes and weights of an n-point Gauss rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Eigen-solves the symmetric Jacobi matrix with zero diagonal and the given
/// off-diagonal, returning nodes sorted ascending and weights `mu0 * v0^2`.
fn golub_welsch(off_diag: &[f64], mu0: f64) -> Rule {
    let n = off_diag.len() + 1;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for (k, &b) in off_diag.iter().enumerate() {
        jacobi[(k, k + 1)] = b;
        jacobi[(k + 1, k)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Physicists' Gauss-Hermite rule: `∫ exp(-x²) h(x) dx ≈ Σ w_i h(x_i)`.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1, "quadrature needs at least one node");
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    golub_welsch(&off, std::f64::consts::PI.sqrt())
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "quadrature needs at least one node");
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&off, 2.0)
}

/// Expectation of `h(f)` for `f ~ N(mean, var)` under a Gauss-Hermite rule.
pub fn gaussian_expectation(rule: &Rule, mean: f64, var: f64, mut h: impl FnMut(f64) -> f64) -> f64 {
    let scale = (2.0 * var.max(0.0)).sqrt();
    let norm = std::f64::consts::PI.sqrt();
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * h(mean + scale * x))
        .sum::<f64>()
        / norm
}
