//! Expected log-likelihoods under Gaussian marginals and their derivatives
//! with respect to the marginal means and variances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::quadrature::{gauss_hermite, Rule};

/// Observation model linking latent values to labels.
#[derive(Debug, Clone, PartialEq)]
pub enum Likelihood {
    /// Binary labels `{0, 1}` with a logistic link on one latent function.
    BernoulliLogit,
    /// `classes` independent latent functions and a softmax link.
    Softmax { classes: usize },
    /// Gaussian observations of real targets. Only used as a tractable
    /// reference: its ELBO is bounded by the closed-form evidence.
    Gaussian { noise_variance: f64, targets: Vec<f64> },
}

impl Likelihood {
    pub fn num_latents(&self) -> usize {
        match self {
            Likelihood::Softmax { classes } => *classes,
            _ => 1,
        }
    }
}

/// `log σ(x)` without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Value and gradients of `Σ_n E_q[log p(y_n | f_n)]`.
#[derive(Debug, Clone)]
pub struct ExpectedLogLik {
    pub value: f64,
    /// `d/dμ[c][n]`
    pub d_mean: Vec<Vec<f64>>,
    /// `d/dv[c][n]`
    pub d_var: Vec<Vec<f64>>,
}

/// Likelihood plus the fixed numerical ingredients for evaluating it: the
/// Gauss-Hermite rule (binary) or common random numbers (softmax).
#[derive(Debug, Clone)]
pub struct LikelihoodContext {
    pub likelihood: Likelihood,
    pub labels: Vec<usize>,
    rule: Rule,
    /// Standard normal draws, laid out `[n][s][c]`.
    draws: Vec<f64>,
    samples: usize,
}

impl LikelihoodContext {
    pub fn new(likelihood: Likelihood, labels: Vec<usize>, quadrature_nodes: usize, mc_samples: usize, seed: u64) -> Self {
        let draws = match &likelihood {
            Likelihood::Softmax { classes } => standard_normal_draws(seed, labels.len() * mc_samples * classes),
            _ => Vec::new(),
        };
        Self {
            likelihood,
            labels,
            rule: gauss_hermite(quadrature_nodes),
            draws,
            samples: mc_samples,
        }
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// Expected log-likelihood for marginals `mean[c][n]`, `var[c][n]`.
    pub fn evaluate(&self, mean: &[Vec<f64>], var: &[Vec<f64>]) -> ExpectedLogLik {
        match &self.likelihood {
            Likelihood::BernoulliLogit => self.bernoulli(&mean[0], &var[0]),
            Likelihood::Softmax { classes } => self.softmax(*classes, mean, var),
            Likelihood::Gaussian { noise_variance, targets } => gaussian(*noise_variance, targets, &mean[0], &var[0]),
        }
    }

    fn bernoulli(&self, mean: &[f64], var: &[f64]) -> ExpectedLogLik {
        let n = mean.len();
        let norm = std::f64::consts::PI.sqrt();
        let mut value = 0.0;
        let mut d_mean = vec![0.0; n];
        let mut d_var = vec![0.0; n];
        for i in 0..n {
            let s = if self.labels[i] == 1 { 1.0 } else { -1.0 };
            let scale = (2.0 * var[i].max(0.0)).sqrt();
            let (mut e, mut d1, mut d2, mut d_scale) = (0.0, 0.0, 0.0, 0.0);
            for (&x, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let f = mean[i] + scale * x;
                let p = sigmoid(f);
                let g = s * sigmoid(-s * f);
                e += w * log_sigmoid(s * f);
                d1 += w * g;
                d2 += w * (-p * (1.0 - p));
                d_scale += w * g * x;
            }
            value += e / norm;
            d_mean[i] = d1 / norm;
            // Exact derivative of the quadrature sum; the Gaussian identity
            // ½E[h''] only at vanishing variance.
            d_var[i] = if scale > 1e-8 {
                d_scale / (norm * scale)
            } else {
                0.5 * d2 / norm
            };
        }
        ExpectedLogLik {
            value,
            d_mean: vec![d_mean],
            d_var: vec![d_var],
        }
    }

    fn softmax(&self, classes: usize, mean: &[Vec<f64>], var: &[Vec<f64>]) -> ExpectedLogLik {
        let n = self.labels.len();
        let s_count = self.samples;
        let mut value = 0.0;
        let mut d_mean = vec![vec![0.0; n]; classes];
        let mut d_var = vec![vec![0.0; n]; classes];
        let mut f = vec![0.0; classes];
        let mut d_std = vec![0.0; classes];
        for i in 0..n {
            let y = self.labels[i];
            let std: Vec<f64> = (0..classes).map(|c| var[c][i].max(0.0).sqrt()).collect();
            d_std.iter_mut().for_each(|x| *x = 0.0);
            for s in 0..s_count {
                let eps = &self.draws[(i * s_count + s) * classes..(i * s_count + s + 1) * classes];
                for c in 0..classes {
                    f[c] = mean[c][i] + std[c] * eps[c];
                }
                let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = fmax + f.iter().map(|v| (v - fmax).exp()).sum::<f64>().ln();
                value += (f[y] - lse) / s_count as f64;
                for c in 0..classes {
                    let p = (f[c] - lse).exp();
                    let g = if c == y { 1.0 - p } else { -p };
                    d_mean[c][i] += g / s_count as f64;
                    d_std[c] += g * eps[c] / s_count as f64;
                }
            }
            for c in 0..classes {
                d_var[c][i] = d_std[c] / (2.0 * std[c].max(1e-150));
            }
        }
        ExpectedLogLik { value, d_mean, d_var }
    }
}

fn gaussian(noise: f64, targets: &[f64], mean: &[f64], var: &[f64]) -> ExpectedLogLik {
    let n = mean.len();
    let mut value = 0.0;
    let mut d_mean = vec![0.0; n];
    let mut d_var = vec![0.0; n];
    for i in 0..n {
        let r = targets[i] - mean[i];
        value += -0.5 * (2.0 * std::f64::consts::PI * noise).ln() - (r * r + var[i]) / (2.0 * noise);
        d_mean[i] = r / noise;
        d_var[i] = -0.5 / noise;
    }
    ExpectedLogLik {
        value,
        d_mean: vec![d_mean],
        d_var: vec![d_var],
    }
}

/// `count` standard normal draws from a ChaCha stream.
pub fn standard_normal_draws(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_gradients_match_finite_differences() {
        let ctx = LikelihoodContext::new(Likelihood::BernoulliLogit, vec![1, 0], 20, 1, 0);
        let (m, v) = (vec![0.3, -1.2], vec![0.8, 2.0]);
        let base = ctx.evaluate(&[m.clone()], &[v.clone()]);
        let h = 1e-6;
        for i in 0..2 {
            let mut mp = m.clone();
            mp[i] += h;
            let mut mm = m.clone();
            mm[i] -= h;
            let fd = (ctx.evaluate(&[mp], &[v.clone()]).value - ctx.evaluate(&[mm], &[v.clone()]).value) / (2.0 * h);
            assert!((fd - base.d_mean[0][i]).abs() < 1e-7);
            let mut vp = v.clone();
            vp[i] += h;
            let mut vm = v.clone();
            vm[i] -= h;
            let fd = (ctx.evaluate(&[m.clone()], &[vp]).value - ctx.evaluate(&[m.clone()], &[vm]).value) / (2.0 * h);
            assert!((fd - base.d_var[0][i]).abs() < 1e-7, "{fd} vs {}", base.d_var[0][i]);
        }
    }

    #[test]
    fn softmax_gradients_match_finite_differences() {
        let ctx = LikelihoodContext::new(Likelihood::Softmax { classes: 3 }, vec![2, 0], 20, 16, 9);
        let m = vec![vec![0.1, 0.5], vec![-0.3, 0.0], vec![0.7, -1.0]];
        let v = vec![vec![0.5, 1.0], vec![0.2, 0.3], vec![1.5, 0.9]];
        let base = ctx.evaluate(&m, &v);
        let h = 1e-6;
        for c in 0..3 {
            for i in 0..2 {
                let mut mp = m.clone();
                mp[c][i] += h;
                let mut mm = m.clone();
                mm[c][i] -= h;
                let fd = (ctx.evaluate(&mp, &v).value - ctx.evaluate(&mm, &v).value) / (2.0 * h);
                assert!((fd - base.d_mean[c][i]).abs() < 1e-7);
                let mut vp = v.clone();
                vp[c][i] += h;
                let mut vm = v.clone();
                vm[c][i] -= h;
                let fd = (ctx.evaluate(&m, &vp).value - ctx.evaluate(&m, &vm).value) / (2.0 * h);
                assert!((fd - base.d_var[c][i]).abs() < 1e-6);
            }
        }
    }
}
