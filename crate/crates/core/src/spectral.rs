//! Hodge sub-eigenbases and spectral wavelet filter banks.
//!
//! Vertex signals split into a co-exact part (non-zero eigenvectors of
//! `L0 = B1 B1ᵀ`) and a harmonic part (its null space). Edge signals split into
//! an exact/gradient part spanned by the non-zero eigenvectors of `B1ᵀ B1`, a
//! co-exact/curl part spanned by the non-zero eigenvectors of `B2 B2ᵀ`, and the
//! harmonic remainder. Because `B1 B2 = 0` the two images are orthogonal, so
//! the two decompositions can be computed independently.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{hodge_laplacian, OrientedComplex};

/// Relative factor for the zero-eigenvalue threshold `τ = 1e-8 · max(λ_max, 1)`.
pub const ZERO_TOLERANCE_FACTOR: f64 = 1e-8;

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;

/// Eigenpairs of one Hodge subspace, eigenvalues ascending. `eigenvectors` is
/// `n x r` with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBlock {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenBlock {
    pub fn empty(ambient: usize) -> Self {
        Self {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(ambient, 0),
        }
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Concatenates blocks and re-sorts by eigenvalue.
    pub fn concat(blocks: &[&EigenBlock]) -> EigenBlock {
        let ambient = blocks.first().map_or(0, |b| b.ambient_dim());
        let mut pairs: Vec<(f64, &EigenBlock, usize)> = Vec::new();
        for b in blocks {
            for i in 0..b.rank() {
                pairs.push((b.eigenvalues[i], b, i));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut vectors = DMatrix::zeros(ambient, pairs.len());
        for (k, (_, b, i)) in pairs.iter().enumerate() {
            vectors.set_column(k, &b.eigenvectors.column(*i));
        }
        EigenBlock {
            eigenvalues: DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.0)),
            eigenvectors: vectors,
        }
    }

    /// Fourier coefficients `Uᵀ x` of a signal in this block.
    pub fn project(&self, signal: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(signal)
    }
}

/// Which spectral domain a block or filter bank belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Vertex,
    Edge,
}

/// Hodge subspaces, plus the unsplit eigenbases used when the decomposition
/// is switched off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subspace {
    VertexCoexact,
    VertexHarmonic,
    EdgeExact,
    EdgeCoexact,
    EdgeHarmonic,
    VertexFull,
    EdgeFull,
}

impl Subspace {
    pub fn domain(self) -> Domain {
        match self {
            Subspace::VertexCoexact | Subspace::VertexHarmonic | Subspace::VertexFull => Domain::Vertex,
            _ => Domain::Edge,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Subspace::VertexCoexact => "vc",
            Subspace::VertexHarmonic => "vh",
            Subspace::EdgeExact => "ee",
            Subspace::EdgeCoexact => "ec",
            Subspace::EdgeHarmonic => "eh",
            Subspace::VertexFull => "v",
            Subspace::EdgeFull => "e",
        }
    }
}

/// Eigenpairs of `L0` and `L1` partitioned into Hodge sub-eigenbases.
#[derive(Debug, Clone)]
pub struct HodgeSpectrum {
    pub vertex_coexact: EigenBlock,
    pub vertex_harmonic: EigenBlock,
    pub edge_exact: EigenBlock,
    pub edge_coexact: EigenBlock,
    pub edge_harmonic: EigenBlock,
    /// Zero thresholds used for the vertex and edge splits.
    pub vertex_tolerance: f64,
    pub edge_tolerance: f64,
}

/// Which domains to decompose; skipping the edge domain avoids the `N_e`-sized
/// work for vertex-only datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainRequest {
    pub vertex: bool,
    pub edge: bool,
}

impl DomainRequest {
    pub const BOTH: DomainRequest = DomainRequest {
        vertex: true,
        edge: true,
    };
}

fn sym_eigen(matrix: DMatrix<f64>, what: &str) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = matrix.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(matrix, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::numerical(what, "symmetric eigensolver did not converge"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

fn zero_tolerance(values: &[f64]) -> f64 {
    let lmax = values.iter().copied().fold(0.0_f64, f64::max);
    ZERO_TOLERANCE_FACTOR * lmax.max(1.0)
}

/// Splits sorted eigenpairs at `tol` into (zero block, non-zero block). Zero
/// eigenvalues are stored as exactly 0.
fn split_at_tolerance(values: &[f64], vectors: &DMatrix<f64>, tol: f64) -> (EigenBlock, EigenBlock) {
    let n = vectors.nrows();
    let cut = values.iter().take_while(|&&l| l <= tol).count();
    let zero = EigenBlock {
        eigenvalues: DVector::zeros(cut),
        eigenvectors: vectors.columns(0, cut).into_owned(),
    };
    let rest = EigenBlock {
        eigenvalues: DVector::from_column_slice(&values[cut..]),
        eigenvectors: vectors.columns(cut, n - cut).into_owned(),
    };
    (zero, rest)
}

/// Non-zero eigenpairs of `B Bᵀ` computed through the Gram matrix `Bᵀ B`: if
/// `Bᵀ B w = μ w` with `μ > 0`, then `u = B w / √μ` is a unit eigenvector of
/// `B Bᵀ` with the same eigenvalue.
fn image_eigenpairs(b: &DMatrix<f64>, what: &str) -> Result<(EigenBlock, f64)> {
    let (values, vectors) = sym_eigen(b.tr_mul(b), what)?;
    let tol = zero_tolerance(&values);
    let (_, nonzero) = split_at_tolerance(&values, &vectors, tol);
    let mut lifted = b * &nonzero.eigenvectors;
    for (k, mut col) in lifted.column_iter_mut().enumerate() {
        col /= nonzero.eigenvalues[k].sqrt();
    }
    Ok((
        EigenBlock {
            eigenvalues: nonzero.eigenvalues,
            eigenvectors: lifted,
        },
        tol,
    ))
}

/// Orthonormal basis of the complement of the column span of `occupied`.
fn orthogonal_complement(occupied: &DMatrix<f64>, dim: usize) -> Result<DMatrix<f64>> {
    let ambient = occupied.nrows();
    if dim == 0 {
        return Ok(DMatrix::zeros(ambient, 0));
    }
    let projector = DMatrix::identity(ambient, ambient) - occupied * occupied.transpose();
    let (_, vectors) = sym_eigen(projector, "harmonic complement projector")?;
    Ok(vectors.columns(ambient - dim, dim).into_owned())
}

impl HodgeSpectrum {
    /// Decomposes both domains.
    pub fn compute(complex: &OrientedComplex) -> Result<Self> {
        Self::compute_for(complex, DomainRequest::BOTH)
    }

    pub fn compute_for(complex: &OrientedComplex, request: DomainRequest) -> Result<Self> {
        let nv = complex.num_vertices();
        let ne = complex.num_edges();
        let b1 = complex.b1_f64();

        let (vertex_harmonic, vertex_coexact, vertex_tolerance) = if request.vertex || request.edge {
            let (values, vectors) = sym_eigen(hodge_laplacian(complex, 0)?, "graph Laplacian L0")?;
            let tol = zero_tolerance(&values);
            let (zero, rest) = split_at_tolerance(&values, &vectors, tol);
            (zero, rest, tol)
        } else {
            (EigenBlock::empty(nv), EigenBlock::empty(nv), 0.0)
        };

        if !request.edge {
            return Ok(Self {
                vertex_coexact,
                vertex_harmonic,
                edge_exact: EigenBlock::empty(ne),
                edge_coexact: EigenBlock::empty(ne),
                edge_harmonic: EigenBlock::empty(ne),
                vertex_tolerance,
                edge_tolerance: 0.0,
            });
        }

        // Non-zero spectrum of B1ᵀB1 equals that of L0 = B1B1ᵀ.
        let mut edge_exact_vectors = b1.tr_mul(&vertex_coexact.eigenvectors);
        for (k, mut col) in edge_exact_vectors.column_iter_mut().enumerate() {
            col /= vertex_coexact.eigenvalues[k].sqrt();
        }
        let edge_exact = EigenBlock {
            eigenvalues: vertex_coexact.eigenvalues.clone(),
            eigenvectors: edge_exact_vectors,
        };
        let (edge_coexact, coexact_tol) = image_eigenpairs(&complex.b2_f64(), "upper Laplacian B2ᵀB2")?;

        let harmonic_dim = ne - edge_exact.rank() - edge_coexact.rank();
        let occupied = EigenBlock::concat(&[&edge_exact, &edge_coexact]).eigenvectors;
        let edge_harmonic = EigenBlock {
            eigenvalues: DVector::zeros(harmonic_dim),
            eigenvectors: orthogonal_complement(&occupied, harmonic_dim)?,
        };
        Ok(Self {
            vertex_coexact,
            vertex_harmonic,
            edge_exact,
            edge_coexact,
            edge_harmonic,
            vertex_tolerance,
            edge_tolerance: vertex_tolerance.max(coexact_tol),
        })
    }

    /// The eigen-block for a subspace; the `*Full` variants merge all blocks of
    /// their domain into one eigenbasis.
    pub fn block(&self, subspace: Subspace) -> std::borrow::Cow<'_, EigenBlock> {
        use std::borrow::Cow;
        match subspace {
            Subspace::VertexCoexact => Cow::Borrowed(&self.vertex_coexact),
            Subspace::VertexHarmonic => Cow::Borrowed(&self.vertex_harmonic),
            Subspace::EdgeExact => Cow::Borrowed(&self.edge_exact),
            Subspace::EdgeCoexact => Cow::Borrowed(&self.edge_coexact),
            Subspace::EdgeHarmonic => Cow::Borrowed(&self.edge_harmonic),
            Subspace::VertexFull => Cow::Owned(EigenBlock::concat(&[&self.vertex_coexact, &self.vertex_harmonic])),
            Subspace::EdgeFull => Cow::Owned(EigenBlock::concat(&[
                &self.edge_exact,
                &self.edge_coexact,
                &self.edge_harmonic,
            ])),
        }
    }

    /// Largest eigenvalue in a domain (0 for empty spectra).
    pub fn max_eigenvalue(&self, domain: Domain) -> f64 {
        let blocks: &[&EigenBlock] = match domain {
            Domain::Vertex => &[&self.vertex_coexact],
            Domain::Edge => &[&self.edge_exact, &self.edge_coexact],
        };
        blocks
            .iter()
            .flat_map(|b| b.eigenvalues.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Low-pass scaling function `a(x) = exp(-x²)`.
pub fn scaling_function(x: f64) -> f64 {
    (-x * x).exp()
}

/// Mexican-hat (Ricker) mother wavelet of width `sigma`.
pub fn mexican_hat(x: f64, sigma: f64) -> f64 {
    let norm = 2.0 / ((3.0 * sigma).sqrt() * std::f64::consts::PI.powf(0.25));
    let r = x / sigma;
    norm * (1.0 - r * r) * (-x * x / (2.0 * sigma * sigma)).exp()
}

/// Trainable wavelet filters `w_j(λ) = a(α_j λ) + Σ_l b(β_jl λ)`.
///
/// Scales are stored as logarithms so every value the optimiser can reach is
/// a valid positive scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    pub domain: Domain,
    pub num_filters: usize,
    pub num_scales: usize,
    /// `log α_j`, one per filter.
    pub log_scaling_scale: Vec<f64>,
    /// `log β_jl`, row-major `num_filters x num_scales`.
    pub log_wavelet_scales: Vec<f64>,
    pub mother_width: f64,
}

impl FilterBank {
    pub fn new(
        domain: Domain,
        log_scaling_scale: Vec<f64>,
        log_wavelet_scales: Vec<f64>,
        num_scales: usize,
    ) -> Result<Self> {
        let num_filters = log_scaling_scale.len();
        if num_filters == 0 {
            return Err(Error::contract("a filter bank needs at least one filter"));
        }
        if log_wavelet_scales.len() != num_filters * num_scales {
            return Err(Error::contract(format!(
                "expected {} wavelet scales, got {}",
                num_filters * num_scales,
                log_wavelet_scales.len()
            )));
        }
        Ok(Self {
            domain,
            num_filters,
            num_scales,
            log_scaling_scale,
            log_wavelet_scales,
            mother_width: 1.0,
        })
    }

    /// Default initialisation for a population whose largest eigenvalue is
    /// `lambda_max`: the wavelet scales of each filter cover
    /// `[0.5, 2] / λ_max` geometrically and `α = 1 / λ_max`; filter `j` is then
    /// shifted by `2^(j - (W-1)/2)` so the filters start out distinct.
    pub fn initialized(domain: Domain, num_filters: usize, num_scales: usize, lambda_max: f64) -> Result<Self> {
        let base = -(lambda_max.max(1e-12)).ln();
        let mut log_scaling = Vec::with_capacity(num_filters);
        let mut log_wavelet = Vec::with_capacity(num_filters * num_scales);
        for j in 0..num_filters {
            let shift = (j as f64 - (num_filters as f64 - 1.0) / 2.0) * std::f64::consts::LN_2;
            log_scaling.push(base + shift);
            for l in 0..num_scales {
                let t = if num_scales > 1 {
                    l as f64 / (num_scales as f64 - 1.0)
                } else {
                    0.5
                };
                let grid = 0.5f64.ln() + t * (4.0f64).ln();
                log_wavelet.push(base + grid + shift);
            }
        }
        Self::new(domain, log_scaling, log_wavelet, num_scales)
    }

    /// Number of trainable log-scales.
    pub fn num_params(&self) -> usize {
        self.num_filters * (1 + self.num_scales)
    }

    /// Log-scales of filter `j`: `[log α_j, log β_j1, ..]`.
    pub fn filter_params(&self, j: usize) -> Vec<f64> {
        let mut p = vec![self.log_scaling_scale[j]];
        p.extend_from_slice(&self.log_wavelet_scales[j * self.num_scales..(j + 1) * self.num_scales]);
        p
    }

    pub fn set_filter_params(&mut self, j: usize, params: &[f64]) {
        self.log_scaling_scale[j] = params[0];
        self.log_wavelet_scales[j * self.num_scales..(j + 1) * self.num_scales].copy_from_slice(&params[1..]);
    }

    /// `w_j(λ)` for a single eigenvalue.
    pub fn response(&self, j: usize, lambda: f64) -> f64 {
        filter_response(
            self.log_scaling_scale[j],
            &self.log_wavelet_scales[j * self.num_scales..(j + 1) * self.num_scales],
            self.mother_width,
            lambda,
        )
    }

    /// `w_j` applied elementwise.
    pub fn evaluate(&self, j: usize, eigenvalues: &[f64]) -> Result<Vec<f64>> {
        if j >= self.num_filters {
            return Err(Error::contract(format!(
                "filter index {j} out of range for a bank of {}",
                self.num_filters
            )));
        }
        Ok(eigenvalues.iter().map(|&l| self.response(j, l)).collect())
    }
}

/// `a(e^{s} λ) + Σ_l b(e^{t_l} λ)` for log-scales `s` and `t`.
pub fn filter_response(log_alpha: f64, log_betas: &[f64], sigma: f64, lambda: f64) -> f64 {
    let low = scaling_function(log_alpha.exp() * lambda);
    low + log_betas
        .iter()
        .map(|&lb| mexican_hat(lb.exp() * lambda, sigma))
        .sum::<f64>()
}

/// Filtered signal restricted to one Hodge block: `U w_j(Λ) Uᵀ x`. An empty
/// block yields the zero vector of the ambient dimension.
pub fn wavelet_coefficients(
    signal: &DVector<f64>,
    block: &EigenBlock,
    bank: &FilterBank,
    filter_index: usize,
) -> Result<DVector<f64>> {
    if signal.len() != block.ambient_dim() {
        return Err(Error::contract(format!(
            "signal has length {}, eigenbasis has {} rows",
            signal.len(),
            block.ambient_dim()
        )));
    }
    let response = bank.evaluate(filter_index, block.eigenvalues.as_slice())?;
    let mut coeffs = block.project(signal);
    for (c, w) in coeffs.iter_mut().zip(response) {
        *c *= w;
    }
    Ok(&block.eigenvectors * coeffs)
}
