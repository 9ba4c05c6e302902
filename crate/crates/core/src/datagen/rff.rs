//! Random Fourier feature samples of a squared-exponential GP on the plane.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};

/// `f(x) = √(2/F) Σ_i c_i cos(ω_i·x + b_i)` with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct RffField {
    omegas: Vec<[f64; 2]>,
    phases: Vec<f64>,
    weights: Vec<f64>,
    scale: f64,
}

impl RffField {
    /// `ω ~ N(0, ℓ⁻² I)`, `b ~ U[0, 2π)`, `c ~ N(0, 1)`.
    pub fn sample<R: Rng>(num_features: usize, lengthscale: f64, rng: &mut R) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::contract("a random Fourier field needs at least one feature"));
        }
        if !(lengthscale > 0.0) {
            return Err(Error::contract("lengthscale must be positive"));
        }
        let freq = Normal::new(0.0, 1.0 / lengthscale).expect("positive std");
        let mut omegas = Vec::with_capacity(num_features);
        let mut phases = Vec::with_capacity(num_features);
        let mut weights = Vec::with_capacity(num_features);
        for _ in 0..num_features {
            omegas.push([freq.sample(rng), freq.sample(rng)]);
            phases.push(rng.random_range(0.0..std::f64::consts::TAU));
            weights.push(StandardNormal.sample(rng));
        }
        Ok(Self {
            omegas,
            phases,
            weights,
            scale: (2.0 / num_features as f64).sqrt(),
        })
    }

    pub fn value(&self, p: [f64; 2]) -> f64 {
        self.scale
            * self
                .omegas
                .iter()
                .zip(&self.phases)
                .zip(&self.weights)
                .map(|((w, b), c)| c * (w[0] * p[0] + w[1] * p[1] + b).cos())
                .sum::<f64>()
    }

    /// `(∂f/∂x, ∂f/∂y)`.
    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for ((w, b), c) in self.omegas.iter().zip(&self.phases).zip(&self.weights) {
            let s = -c * (w[0] * p[0] + w[1] * p[1] + b).sin();
            g[0] += s * w[0];
            g[1] += s * w[1];
        }
        [self.scale * g[0], self.scale * g[1]]
    }

    /// Rotated gradient `(f_y, -f_x)`, which is divergence-free.
    pub fn rotated_gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let [gx, gy] = self.gradient(p);
        [gy, -gx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field() -> RffField {
        RffField::sample(256, 0.3, &mut ChaCha8Rng::seed_from_u64(11)).unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = 1e-5;
        for _ in 0..100 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            let g = f.gradient(p);
            let fx = (f.value([p[0] + h, p[1]]) - f.value([p[0] - h, p[1]])) / (2.0 * h);
            let fy = (f.value([p[0], p[1] + h]) - f.value([p[0], p[1] - h])) / (2.0 * h);
            assert!((fx - g[0]).abs() <= 1e-6 * (1.0 + g[0].abs()));
            assert!((fy - g[1]).abs() <= 1e-6 * (1.0 + g[1].abs()));
        }
    }

    #[test]
    fn gradient_is_curl_free_and_rotation_is_divergence_free() {
        let f = field();
        let h = 1e-5;
        for p in [[0.2, 0.7], [0.5, 0.5], [0.9, 0.1]] {
            let dgy_dx = (f.gradient([p[0] + h, p[1]])[1] - f.gradient([p[0] - h, p[1]])[1]) / (2.0 * h);
            let dgx_dy = (f.gradient([p[0], p[1] + h])[0] - f.gradient([p[0], p[1] - h])[0]) / (2.0 * h);
            assert!((dgy_dx - dgx_dy).abs() <= 1e-6 * (1.0 + dgy_dx.abs()));
            let div = (f.rotated_gradient([p[0] + h, p[1]])[0] - f.rotated_gradient([p[0] - h, p[1]])[0]) / (2.0 * h)
                + (f.rotated_gradient([p[0], p[1] + h])[1] - f.rotated_gradient([p[0], p[1] - h])[1]) / (2.0 * h);
            assert!(div.abs() <= 1e-6 * (1.0 + dgy_dx.abs()));
        }
    }

    #[test]
    fn rejects_empty_expansion() {
        assert!(RffField::sample(0, 0.3, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
