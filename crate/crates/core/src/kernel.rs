//! Base kernels and the additive Hodgelet kernel.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::HodgeletFeatures;
use crate::spectral::Subspace;

/// Relative jitter added to Gram diagonals: `1e-6 · mean(diag K)`.
pub const DEFAULT_RELATIVE_JITTER: f64 = 1e-6;

/// Half-integer Matérn smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaternNu {
    #[serde(rename = "0.5")]
    Half,
    #[serde(rename = "1.5")]
    ThreeHalves,
    #[serde(rename = "2.5")]
    FiveHalves,
}

impl MaternNu {
    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum BaseKernel {
    SquaredExponential,
    Matern { nu: MaternNu },
}

impl BaseKernel {
    /// Kernel value as a function of the distance `r = ‖x - y‖`.
    pub fn of_distance(self, variance: f64, lengthscale: f64, r: f64) -> f64 {
        match self {
            BaseKernel::SquaredExponential => variance * (-r * r / (2.0 * lengthscale * lengthscale)).exp(),
            BaseKernel::Matern { nu } => {
                let s = r / lengthscale;
                match nu {
                    MaternNu::Half => variance * (-s).exp(),
                    MaternNu::ThreeHalves => {
                        let a = 3f64.sqrt() * s;
                        variance * (1.0 + a) * (-a).exp()
                    }
                    MaternNu::FiveHalves => {
                        let a = 5f64.sqrt() * s;
                        variance * (1.0 + a + a * a / 3.0) * (-a).exp()
                    }
                }
            }
        }
    }
}

/// Hyperparameters of one additive term, stored as logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermParams {
    pub kernel: BaseKernel,
    pub log_variance: f64,
    pub log_lengthscale: f64,
}

impl TermParams {
    pub fn new(kernel: BaseKernel, variance: f64, lengthscale: f64) -> Self {
        Self {
            kernel,
            log_variance: variance.ln(),
            log_lengthscale: lengthscale.ln(),
        }
    }

    pub fn variance(&self) -> f64 {
        self.log_variance.exp()
    }

    pub fn lengthscale(&self) -> f64 {
        self.log_lengthscale.exp()
    }
}

/// Base kernel evaluated on two vectors.
pub fn base_kernel(params: &TermParams, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::contract(format!(
            "kernel inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(params
        .kernel
        .of_distance(params.variance(), params.lengthscale(), distance(x, y)))
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Parameters of the additive kernel: one entry per active term. Terms for an
/// absent feature domain are simply not listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub terms: Vec<(Subspace, TermParams)>,
}

impl KernelParams {
    pub fn new(terms: Vec<(Subspace, TermParams)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::contract("the additive kernel needs at least one active term"));
        }
        Ok(Self { terms })
    }

    pub fn total_variance(&self) -> f64 {
        self.terms.iter().map(|t| t.1.variance()).sum()
    }

    /// Log-parameters flattened as `[log σ²_0, log ℓ_0, log σ²_1, ...]`.
    pub fn to_log_vec(&self) -> Vec<f64> {
        self.terms
            .iter()
            .flat_map(|(_, p)| [p.log_variance, p.log_lengthscale])
            .collect()
    }

    pub fn set_log_vec(&mut self, v: &[f64]) {
        for (k, (_, p)) in self.terms.iter_mut().enumerate() {
            p.log_variance = v[2 * k];
            p.log_lengthscale = v[2 * k + 1];
        }
    }
}

/// `Σ_t κ_t(f1_t, f2_t)` over the active terms.
pub fn hodgelet_kernel(params: &KernelParams, f1: &HodgeletFeatures, f2: &HodgeletFeatures) -> Result<f64> {
    let mut total = 0.0;
    for (term, p) in &params.terms {
        let (a, b) = (f1.get(*term), f2.get(*term));
        if a.len() != b.len() {
            return Err(Error::contract(format!(
                "feature layouts differ for term {}",
                term.short_name()
            )));
        }
        total += base_kernel(p, a, b)?;
    }
    Ok(total)
}

/// Gram matrix of one term, without jitter. Symmetric by construction.
pub fn term_gram(term: Subspace, params: &TermParams, features: &[HodgeletFeatures]) -> DMatrix<f64> {
    cross_term_gram(term, params, features, features, true)
}

/// `K[i][j] = κ_t(a_i, b_j)`; `symmetric` computes each unordered pair once.
pub fn cross_term_gram(
    term: Subspace,
    params: &TermParams,
    a: &[HodgeletFeatures],
    b: &[HodgeletFeatures],
    symmetric: bool,
) -> DMatrix<f64> {
    let (variance, lengthscale) = (params.variance(), params.lengthscale());
    let rows: Vec<Vec<f64>> = a
        .par_iter()
        .enumerate()
        .map(|(i, fi)| {
            let start = if symmetric { i } else { 0 };
            (start..b.len())
                .map(|j| {
                    params
                        .kernel
                        .of_distance(variance, lengthscale, distance(fi.get(term), b[j].get(term)))
                })
                .collect()
        })
        .collect();
    let mut k = DMatrix::zeros(a.len(), b.len());
    for (i, row) in rows.into_iter().enumerate() {
        let start = if symmetric { i } else { 0 };
        for (off, v) in row.into_iter().enumerate() {
            k[(i, start + off)] = v;
            if symmetric {
                k[(start + off, i)] = v;
            }
        }
    }
    k
}

/// Jitter to use for a Gram matrix: an explicit value, or the default
/// fraction of the mean diagonal.
pub fn resolve_jitter(k: &DMatrix<f64>, jitter: Option<f64>) -> f64 {
    jitter.unwrap_or_else(|| {
        let n = k.nrows().max(1) as f64;
        DEFAULT_RELATIVE_JITTER * k.diagonal().sum() / n
    })
}

/// Hodgelet Gram matrix with `jitter` (or the default) added to the diagonal.
pub fn gram_matrix(params: &KernelParams, features: &[HodgeletFeatures], jitter: Option<f64>) -> Result<DMatrix<f64>> {
    if let Some(j) = jitter {
        if !(j >= 0.0) {
            return Err(Error::contract("jitter must be non-negative"));
        }
    }
    if let Some(first) = features.first() {
        let layout = first.layout();
        if features.iter().any(|f| f.layout() != layout) {
            return Err(Error::contract("feature layouts differ across graphs"));
        }
    }
    let n = features.len();
    let mut k = DMatrix::zeros(n, n);
    for (term, p) in &params.terms {
        k += term_gram(*term, p, features);
    }
    let jit = resolve_jitter(&k, jitter);
    for i in 0..n {
        k[(i, i)] += jit;
    }
    Ok(k)
}
