//! Whitened full-rank variational posteriors.
//!
//! Each latent function has `q(f) = N(L a, L A Aᵀ Lᵀ)` with `K = L Lᵀ` and `A`
//! lower triangular with positive diagonal. In these coordinates
//! `KL(q ‖ N(0, K)) = ½(‖a‖² + ‖A‖²_F − N − 2 Σ log A_ii)`.

use nalgebra::{DMatrix, DVector};

use super::likelihood::LikelihoodContext;

#[derive(Debug, Clone, PartialEq)]
pub struct Whitened {
    pub a: DVector<f64>,
    pub chol: DMatrix<f64>,
}

impl Whitened {
    /// `q = prior`.
    pub fn prior(n: usize) -> Self {
        Self {
            a: DVector::zeros(n),
            chol: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `N + N(N+1)/2` free parameters.
    pub fn num_params(&self) -> usize {
        let n = self.dim();
        n + n * (n + 1) / 2
    }

    /// `[a, tril(A)]` row by row, with `log A_ii` on the diagonal.
    pub fn pack(&self, out: &mut Vec<f64>) {
        let n = self.dim();
        out.extend(self.a.iter());
        for i in 0..n {
            for j in 0..i {
                out.push(self.chol[(i, j)]);
            }
            out.push(self.chol[(i, i)].ln());
        }
    }

    /// Inverse of [`Whitened::pack`]; returns the number of values consumed.
    pub fn unpack(&mut self, v: &[f64]) -> usize {
        let n = self.dim();
        self.a.copy_from_slice(&v[..n]);
        let mut k = n;
        for i in 0..n {
            for j in 0..i {
                self.chol[(i, j)] = v[k];
                k += 1;
            }
            self.chol[(i, i)] = v[k].exp();
            k += 1;
        }
        k
    }

    pub fn kl(&self) -> f64 {
        let n = self.dim() as f64;
        let log_det: f64 = self.chol.diagonal().iter().map(|d| d.ln()).sum();
        0.5 * (self.a.norm_squared() + self.chol.norm_squared() - n - 2.0 * log_det)
    }

    /// Unwhitened `(m, chol S) = (L a, L A)`.
    pub fn unwhiten(&self, l: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        (l * &self.a, l * &self.chol)
    }

    /// Whitened coordinates of an explicit `(m, chol S)`.
    pub fn whiten(l: &DMatrix<f64>, mean: &DVector<f64>, chol_s: &DMatrix<f64>) -> Option<Self> {
        let a = l.solve_lower_triangular(mean)?;
        let mut chol = l.solve_lower_triangular(chol_s)?;
        for i in 0..chol.nrows() {
            for j in i + 1..chol.ncols() {
                chol[(i, j)] = 0.0;
            }
        }
        Some(Self { a, chol })
    }
}

/// ELBO value, its pieces, and optionally the gradient in packed coordinates.
#[derive(Debug, Clone)]
pub struct ElboEval {
    pub value: f64,
    pub expected_log_lik: f64,
    pub kl: f64,
    pub grad: Option<Vec<f64>>,
}

/// Marginal means and variances of `q` at the training points.
pub fn marginals(l: &DMatrix<f64>, q: &[Whitened]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<DMatrix<f64>>) {
    let mut means = Vec::with_capacity(q.len());
    let mut vars = Vec::with_capacity(q.len());
    let mut factors = Vec::with_capacity(q.len());
    for latent in q {
        let mu = l * &latent.a;
        let m = l * &latent.chol;
        vars.push(m.row_iter().map(|r| r.norm_squared()).collect());
        means.push(mu.iter().copied().collect());
        factors.push(m);
    }
    (means, vars, factors)
}

pub fn elbo(l: &DMatrix<f64>, q: &[Whitened], ctx: &LikelihoodContext, with_grad: bool) -> ElboEval {
    let (means, vars, factors) = marginals(l, q);
    let ell = ctx.evaluate(&means, &vars);
    let kl: f64 = q.iter().map(Whitened::kl).sum();
    let grad = with_grad.then(|| {
        let mut g = Vec::with_capacity(q.iter().map(Whitened::num_params).sum());
        for (c, latent) in q.iter().enumerate() {
            let n = latent.dim();
            let g_mu = DVector::from_column_slice(&ell.d_mean[c]);
            let g_a = l.tr_mul(&g_mu) - &latent.a;
            g.extend(g_a.iter());
            let mut scaled = factors[c].clone();
            for (i, mut row) in scaled.row_iter_mut().enumerate() {
                row *= 2.0 * ell.d_var[c][i];
            }
            let g_chol = l.tr_mul(&scaled);
            for i in 0..n {
                for j in 0..i {
                    g.push(g_chol[(i, j)] - latent.chol[(i, j)]);
                }
                let d = latent.chol[(i, i)];
                g.push((g_chol[(i, i)] - d + 1.0 / d) * d);
            }
        }
        g
    });
    ElboEval {
        value: ell.value - kl,
        expected_log_lik: ell.value,
        kl,
        grad,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpclf::likelihood::Likelihood;

    fn spd(n: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.4);
        &b * b.transpose() + DMatrix::identity(n, n)
    }

    #[test]
    fn prior_has_zero_kl_and_pack_roundtrips() {
        let q = Whitened::prior(4);
        assert_eq!(q.kl(), 0.0);
        let mut q = q;
        q.a[2] = 0.7;
        q.chol[(3, 1)] = -0.2;
        q.chol[(1, 1)] = 1.5;
        let mut v = Vec::new();
        q.pack(&mut v);
        assert_eq!(v.len(), q.num_params());
        let mut r = Whitened::prior(4);
        r.unpack(&v);
        assert!((&r.chol - &q.chol).amax() < 1e-15 && r.a == q.a);
    }

    #[test]
    fn whiten_inverts_unwhiten() {
        let l = spd(4).cholesky().unwrap().l();
        let mut q = Whitened::prior(4);
        q.a = DVector::from_vec(vec![0.1, -0.3, 0.5, 2.0]);
        q.chol[(2, 0)] = 0.4;
        q.chol[(3, 3)] = 0.6;
        let (m, s) = q.unwhiten(&l);
        let back = Whitened::whiten(&l, &m, &s).unwrap();
        assert!((&back.a - &q.a).amax() < 1e-12 && (&back.chol - &q.chol).amax() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let n = 5;
        let l = spd(n).cholesky().unwrap().l();
        let ctx = LikelihoodContext::new(Likelihood::BernoulliLogit, vec![0, 1, 1, 0, 1], 20, 1, 0);
        let mut q = Whitened::prior(n);
        q.a = DVector::from_fn(n, |i, _| 0.2 * i as f64 - 0.3);
        q.chol[(3, 1)] = 0.25;
        q.chol[(2, 2)] = 0.8;
        let eval = elbo(&l, std::slice::from_ref(&q), &ctx, true);
        let grad = eval.grad.unwrap();
        let mut p = Vec::new();
        q.pack(&mut p);
        let h = 1e-6;
        for k in 0..p.len() {
            let mut probe = q.clone();
            let mut v = p.clone();
            v[k] += h;
            probe.unpack(&v);
            let up = elbo(&l, std::slice::from_ref(&probe), &ctx, false).value;
            v[k] -= 2.0 * h;
            probe.unpack(&v);
            let down = elbo(&l, std::slice::from_ref(&probe), &ctx, false).value;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", grad[k]);
        }
    }
}
