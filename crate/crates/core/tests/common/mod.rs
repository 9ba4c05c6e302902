//! Checks shared by the property suite and the acceptance gate. Each returns
//! the measured defect so callers can compare against their own tolerance.

#![allow(dead_code)]

use hodgelet::features::{extract_features, feature_terms};
use hodgelet::gpclf::likelihood::{Likelihood, LikelihoodContext};
use hodgelet::gpclf::variational::{elbo, Whitened};
use hodgelet::kernel::{gram_matrix, MaternNu, TermParams};
use hodgelet::spectral::EigenBlock;
use hodgelet::topology::hodge_laplacian;
use hodgelet::{BaseKernel, Domain, FilterBanks, HodgeSpectrum, HodgeletFeatures, KernelParams, LabeledComplex};
use hodgelet::OrientedComplex;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi edge list on `n` vertices.
pub fn random_edges(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Random graph with two vertex channels and one edge channel; the edge
/// list is shuffled and stored with random endpoint order.
pub fn random_graph(rng: &mut impl Rng) -> LabeledComplex {
    let n = rng.random_range(4..=14);
    let p = rng.random_range(0.2..0.7);
    let mut edges = random_edges(rng, n, p);
    if edges.is_empty() {
        edges.push((0, 1));
    }
    edges.shuffle(rng);
    for e in &mut edges {
        if rng.random::<bool>() {
            *e = (e.1, e.0);
        }
    }
    let complex = OrientedComplex::build(n, &edges).unwrap();
    let ne = complex.num_edges();
    let vf = DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0));
    let ef = DMatrix::from_fn(1, ne, |_, _| rng.random_range(-1.0..1.0));
    LabeledComplex::new(complex, vf, ef, 0).unwrap()
}

pub fn incidence_defect(complex: &OrientedComplex) -> f64 {
    (complex.b1_f64() * complex.b2_f64()).amax()
}

/// Null-space dimension of a symmetric matrix by dense eigensolve.
pub fn nullity(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 {
        return 0;
    }
    let eig = m.clone().symmetric_eigenvalues();
    let scale = eig.amax().max(1.0);
    eig.iter().filter(|&&l| l.abs() < 1e-9 * scale).count()
}

/// `(β0, β1)` from the Laplacian null spaces, and from the Hodge blocks.
pub fn betti(complex: &OrientedComplex) -> ((usize, usize), (usize, usize)) {
    let direct = (
        nullity(&hodge_laplacian(complex, 0).unwrap()),
        nullity(&hodge_laplacian(complex, 1).unwrap()),
    );
    let s = HodgeSpectrum::compute(complex).unwrap();
    (direct, (s.vertex_harmonic.rank(), s.edge_harmonic.rank()))
}

fn basis_defects(blocks: &[&EigenBlock], signals: &DMatrix<f64>) -> (f64, f64) {
    let all = EigenBlock::concat(blocks);
    let n = all.ambient_dim();
    let gram = all.eigenvectors.tr_mul(&all.eigenvectors);
    let ortho = (gram - DMatrix::identity(all.rank(), all.rank())).amax();
    let mut parseval: f64 = if all.rank() == n { 0.0 } else { f64::INFINITY };
    for x in signals.row_iter() {
        let x = x.transpose();
        let energy: f64 = blocks.iter().map(|b| b.project(&x).norm_squared()).sum();
        parseval = parseval.max((energy - x.norm_squared()).abs() / x.norm_squared().max(1e-300));
    }
    (parseval, ortho)
}

/// Largest relative Parseval defect and largest `|UᵀU - I|` entry over both
/// domains.
pub fn spectral_defects(graph: &LabeledComplex) -> (f64, f64) {
    let s = HodgeSpectrum::compute(&graph.complex).unwrap();
    let (pv, ov) = basis_defects(&[&s.vertex_coexact, &s.vertex_harmonic], &graph.vertex_features);
    let (pe, oe) = basis_defects(&[&s.edge_exact, &s.edge_coexact, &s.edge_harmonic], &graph.edge_features);
    (pv.max(pe), ov.max(oe))
}

pub fn features_of(graph: &LabeledComplex, banks: &FilterBanks) -> HodgeletFeatures {
    let spectrum = HodgeSpectrum::compute(&graph.complex).unwrap();
    extract_features(graph, &spectrum, banks).unwrap()
}

pub fn default_banks(lambda_max: f64) -> FilterBanks {
    FilterBanks::initialized(&feature_terms(true, true, true), 4, 3, |_| lambda_max).unwrap()
}

/// Feature change under a random vertex permutation followed by random edge
/// flips.
pub fn invariance_defect(graph: &LabeledComplex, rng: &mut impl Rng) -> f64 {
    let s = HodgeSpectrum::compute(&graph.complex).unwrap();
    let lmax = s.max_eigenvalue(Domain::Vertex).max(s.max_eigenvalue(Domain::Edge)).max(1.0);
    let banks = default_banks(lmax);
    let base = features_of(graph, &banks);
    let mut perm: Vec<usize> = (0..graph.complex.num_vertices()).collect();
    perm.shuffle(rng);
    let moved = graph.relabel(&perm).unwrap();
    let flip: Vec<bool> = (0..moved.complex.num_edges()).map(|_| rng.random()).collect();
    let moved = moved.flip_edges(&flip).unwrap();
    base.max_abs_diff(&features_of(&moved, &banks))
}

/// Random additive-kernel hyperparameters over the default Hodge terms.
pub fn random_kernel(rng: &mut impl Rng) -> KernelParams {
    let kernels = [
        BaseKernel::SquaredExponential,
        BaseKernel::Matern { nu: MaternNu::Half },
        BaseKernel::Matern { nu: MaternNu::ThreeHalves },
        BaseKernel::Matern { nu: MaternNu::FiveHalves },
    ];
    let terms = feature_terms(true, true, true)
        .into_iter()
        .map(|t| {
            let k = kernels[rng.random_range(0..kernels.len())];
            let variance = rng.random_range(-3.0f64..3.0).exp();
            let lengthscale = rng.random_range(-3.0f64..3.0).exp();
            (t, TermParams::new(k, variance, lengthscale))
        })
        .collect();
    KernelParams::new(terms).unwrap()
}

/// Smallest eigenvalue of the jitter-free Gram, relative to its mean
/// diagonal.
pub fn gram_min_eigenvalue(params: &KernelParams, features: &[HodgeletFeatures]) -> f64 {
    let k = gram_matrix(params, features, Some(0.0)).unwrap();
    let scale = k.diagonal().mean();
    k.symmetric_eigenvalues().min() / scale
}

/// Random positive-definite factor `L` of size `n`.
pub fn random_factor(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let x = DMatrix::from_fn(n, n + 2, |_, _| rng.random_range(-1.0..1.0));
    let k = &x * x.transpose() + DMatrix::identity(n, n) * 0.1;
    k.cholesky().unwrap().l()
}

/// Random whitened variational parameters.
pub fn random_whitened(rng: &mut impl Rng, n: usize) -> Whitened {
    let mut q = Whitened::prior(n);
    let mut p = Vec::new();
    q.pack(&mut p);
    for v in &mut p {
        *v += rng.random_range(-0.5..0.5);
    }
    q.unpack(&p);
    q
}

/// Largest relative mismatch between the analytic ELBO gradient and central
/// differences, over all variational parameters.
pub fn variational_gradient_defect(l: &DMatrix<f64>, q: &[Whitened], ctx: &LikelihoodContext) -> f64 {
    let analytic = elbo(l, q, ctx, true).grad.unwrap();
    let mut params = Vec::new();
    for w in q {
        w.pack(&mut params);
    }
    let eval = |p: &[f64]| {
        let mut q = q.to_vec();
        let mut offset = 0;
        for w in q.iter_mut() {
            offset += w.unpack(&p[offset..]);
        }
        elbo(l, &q, ctx, false).value
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut up = params.clone();
        up[i] += h;
        let mut down = params.clone();
        down[i] -= h;
        let fd = (eval(&up) - eval(&down)) / (2.0 * h);
        let err = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-2);
        worst = worst.max(err);
    }
    worst
}

/// Closed-form log evidence `log N(t; 0, K + σ²I)`.
pub fn gaussian_evidence(k: &DMatrix<f64>, noise_variance: f64, targets: &[f64]) -> f64 {
    let n = targets.len();
    let c = (k + DMatrix::identity(n, n) * noise_variance).cholesky().unwrap();
    let t = DVector::from_column_slice(targets);
    let alpha = c.solve(&t);
    let log_det: f64 = c.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    -0.5 * t.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// ELBO of the Gaussian-likelihood surrogate at `q`.
pub fn surrogate_elbo(l: &DMatrix<f64>, q: &Whitened, noise_variance: f64, targets: &[f64]) -> f64 {
    let ctx = LikelihoodContext::new(
        Likelihood::Gaussian {
            noise_variance,
            targets: targets.to_vec(),
        },
        vec![0; targets.len()],
        20,
        1,
        0,
    );
    elbo(l, std::slice::from_ref(q), &ctx, false).value
}

/// Exact Gaussian posterior `S = (K⁻¹ + σ⁻²I)⁻¹`, `m = σ⁻² S t`, whitened
/// against `L`.
pub fn exact_gaussian_posterior(l: &DMatrix<f64>, noise_variance: f64, targets: &[f64]) -> Whitened {
    let n = targets.len();
    let k = l * l.transpose();
    let k_inv = k.clone().cholesky().unwrap().inverse();
    let precision = k_inv + DMatrix::identity(n, n) / noise_variance;
    let s = precision.cholesky().unwrap().inverse();
    let s = (&s + s.transpose()) * 0.5;
    let m = &s * DVector::from_column_slice(targets) / noise_variance;
    let chol_s = s.cholesky().unwrap().l();
    Whitened::whiten(l, &m, &chol_s).unwrap()
}
