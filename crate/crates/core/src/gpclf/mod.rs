//! Variational GP classification over Hodgelet features.
//!
//! Training alternates two loops. The inner loop maximises the ELBO over the
//! whitened variational parameters with analytic gradients. The outer loop
//! takes Adam steps on the log kernel hyperparameters and log filter scales
//! using central finite differences of the ELBO at the current variational
//! optimum; a step is kept only if the re-optimised ELBO does not decrease.

pub mod likelihood;
mod optim;
pub mod variational;

use std::path::Path;

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{dataset_signatures, feature_terms, FilterBanks, HodgeletFeatures, SpectralSignature};
use crate::kernel::{cross_term_gram, resolve_jitter, term_gram, BaseKernel, KernelParams, TermParams};
use crate::spectral::{Domain, Subspace};
use crate::topology::LabeledComplex;

pub use likelihood::{Likelihood, LikelihoodContext};
use optim::Adam;
use variational::Whitened;

/// Snapshot format written by [`GpModel::to_json`].
pub const FORMAT_VERSION: u32 = 1;

/// Largest number of tenfold jitter increases tried before giving up.
const JITTER_ESCALATIONS: usize = 3;

/// Log-hyperparameters are kept inside `[-LOG_BOUND, LOG_BOUND]`.
const LOG_BOUND: f64 = 15.0;

/// Feature and kernel shape of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    /// Split each domain into its Hodge subspaces; otherwise one full
    /// eigenbasis per domain.
    pub hodge: bool,
    pub num_filters: usize,
    pub num_scales: usize,
    pub kernel: BaseKernel,
    /// Use 3-cliques as filled triangles in the edge Laplacian.
    pub augment_triangles: bool,
    pub learn_filters: bool,
    pub learn_kernel: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            hodge: true,
            num_filters: 4,
            num_scales: 3,
            kernel: BaseKernel::SquaredExponential,
            augment_triangles: true,
            learn_filters: true,
            learn_kernel: true,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_filters == 0 || self.num_scales == 0 {
            return Err(Error::contract("filter banks need at least one filter and one scale"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_outer_iters: usize,
    /// Variational steps from the prior before the first outer step.
    pub inner_iters: usize,
    /// Warm-started variational steps after each outer step.
    pub refine_iters: usize,
    pub inner_learning_rate: f64,
    pub outer_learning_rate: f64,
    pub mc_samples: usize,
    pub quadrature_nodes: usize,
    /// Stop once an accepted outer step changes the ELBO by less than this
    /// fraction.
    pub tolerance: f64,
    /// Central-difference step in log-parameter space.
    pub fd_step: f64,
    /// Explicit diagonal jitter; default is a fraction of the mean diagonal.
    pub jitter: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            inner_iters: 200,
            refine_iters: 50,
            inner_learning_rate: 0.05,
            outer_learning_rate: 0.05,
            mc_samples: 64,
            quadrature_nodes: 20,
            tolerance: 1e-5,
            fd_step: 1e-4,
            jitter: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("inner_iters", self.inner_iters),
            ("mc_samples", self.mc_samples),
            ("quadrature_nodes", self.quadrature_nodes),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::contract(format!("{name} must be at least 1")));
            }
        }
        let positive = [
            ("inner_learning_rate", self.inner_learning_rate),
            ("outer_learning_rate", self.outer_learning_rate),
            ("tolerance", self.tolerance),
            ("fd_step", self.fd_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::contract(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(j) = self.jitter {
            if !(j >= 0.0) {
                return Err(Error::contract("jitter must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Variational posterior of one latent function in explicit coordinates:
/// `q(f) = N(mean, chol cholᵀ)` with `chol` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPosterior {
    pub mean: Vec<f64>,
    pub chol: Vec<f64>,
}

impl LatentPosterior {
    fn from_matrices(mean: &DVector<f64>, chol: &DMatrix<f64>) -> Self {
        let n = mean.len();
        Self {
            mean: mean.iter().copied().collect(),
            chol: (0..n * n).map(|k| chol[(k / n, k % n)]).collect(),
        }
    }

    pub fn mean_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mean)
    }

    pub fn chol_matrix(&self) -> DMatrix<f64> {
        let n = self.mean.len();
        DMatrix::from_row_slice(n, n, &self.chol)
    }
}

/// A trained (or prior) classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub config: TrainConfig,
    pub kernel_params: KernelParams,
    /// Empty when the model was fitted on precomputed features.
    pub filter_banks: FilterBanks,
    pub classes: usize,
    /// Diagonal jitter of the training Gram matrix.
    pub jitter: f64,
    /// One entry for binary problems, one per class otherwise.
    pub latents: Vec<LatentPosterior>,
    pub train_features: Vec<HodgeletFeatures>,
    pub train_labels: Vec<usize>,
    pub rng_seed: u64,
    /// ELBO after each accepted outer iteration, starting with the initial
    /// variational solve.
    pub elbo_trace: Vec<f64>,
}

fn likelihood_for(classes: usize) -> Likelihood {
    if classes == 2 {
        Likelihood::BernoulliLogit
    } else {
        Likelihood::Softmax { classes }
    }
}

fn check_labels(labels: &[usize]) -> Result<usize> {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    if classes < 2 {
        return Err(Error::contract("training needs at least two classes"));
    }
    let mut counts = vec![0usize; classes];
    for &y in labels {
        counts[y] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::contract(format!("class {c} is absent from the training labels")));
    }
    Ok(classes)
}

/// Lower Cholesky factor of `k + jitter·I`, raising the jitter tenfold up to
/// three times on failure. Returns the factor and the jitter used.
pub fn cholesky_with_jitter(k: &DMatrix<f64>, jitter: f64) -> Result<(DMatrix<f64>, f64)> {
    let mut jit = jitter;
    for attempt in 0..=JITTER_ESCALATIONS {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jit;
        }
        if let Some(c) = Cholesky::new(kj) {
            if attempt > 0 {
                debug!("Cholesky succeeded after raising jitter to {jit:e}");
            }
            return Ok((c.l(), jit));
        }
        jit = if jit > 0.0 { jit * 10.0 } else { 1e-10 };
    }
    Err(Error::numerical(
        "Gram Cholesky",
        format!("not positive definite even with jitter {:e}", jit / 10.0),
    ))
}

/// Median pairwise distance of each term's features, used as the initial
/// lengthscale (1 if all points coincide). Variances start at 1.
pub fn initial_kernel_params(terms: &[Subspace], features: &[HodgeletFeatures], kernel: BaseKernel) -> Result<KernelParams> {
    let entries = terms
        .iter()
        .map(|&t| {
            let mut d: Vec<f64> = (0..features.len())
                .flat_map(|i| (i + 1..features.len()).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let (a, b) = (features[i].get(t), features[j].get(t));
                    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                })
                .filter(|&x| x > 1e-12)
                .collect();
            d.sort_by(f64::total_cmp);
            let ell = if d.is_empty() { 1.0 } else { d[d.len() / 2] };
            (t, TermParams::new(kernel, 1.0, ell))
        })
        .collect();
    KernelParams::new(entries)
}

/// Where training features come from.
enum Source<'a> {
    Fixed(&'a [HodgeletFeatures]),
    Spectral(&'a [SpectralSignature]),
}

/// Trainable parameters of the kernel and (optionally) the filter banks.
#[derive(Debug, Clone)]
struct Hyper {
    kernel: KernelParams,
    banks: FilterBanks,
    learn_kernel: bool,
    learn_filters: bool,
}

/// Which part of the model a hyperparameter coordinate belongs to.
#[derive(Debug, Clone, Copy)]
enum Slot {
    Kernel { term: usize },
    Filter { term: usize, filter: usize },
}

impl Hyper {
    fn slots(&self) -> Vec<(Slot, usize)> {
        let mut slots = Vec::new();
        if self.learn_kernel {
            for t in 0..self.kernel.terms.len() {
                slots.extend([(Slot::Kernel { term: t }, 0), (Slot::Kernel { term: t }, 1)]);
            }
        }
        if self.learn_filters {
            for (t, (_, bank)) in self.banks.entries.iter().enumerate() {
                for j in 0..bank.num_filters {
                    for k in 0..=bank.num_scales {
                        slots.push((Slot::Filter { term: t, filter: j }, k));
                    }
                }
            }
        }
        slots
    }

    fn to_vec(&self) -> Vec<f64> {
        self.slots().into_iter().map(|(s, k)| self.get(s, k)).collect()
    }

    fn set_vec(&mut self, v: &[f64]) {
        for ((s, k), &x) in self.slots().into_iter().zip(v) {
            self.set(s, k, x);
        }
    }

    fn get(&self, slot: Slot, k: usize) -> f64 {
        match slot {
            Slot::Kernel { term } => {
                let p = &self.kernel.terms[term].1;
                if k == 0 {
                    p.log_variance
                } else {
                    p.log_lengthscale
                }
            }
            Slot::Filter { term, filter } => self.banks.entries[term].1.filter_params(filter)[k],
        }
    }

    fn set(&mut self, slot: Slot, k: usize, x: f64) {
        match slot {
            Slot::Kernel { term } => {
                let p = &mut self.kernel.terms[term].1;
                if k == 0 {
                    p.log_variance = x;
                } else {
                    p.log_lengthscale = x;
                }
            }
            Slot::Filter { term, filter } => {
                let bank = &mut self.banks.entries[term].1;
                let mut params = bank.filter_params(filter);
                params[k] = x;
                bank.set_filter_params(filter, &params);
            }
        }
    }
}

/// Features, per-term Grams and the Cholesky factor at one hyperparameter
/// setting.
#[derive(Debug, Clone)]
struct State {
    hyper: Hyper,
    features: Vec<HodgeletFeatures>,
    term_grams: Vec<DMatrix<f64>>,
    l: DMatrix<f64>,
    jitter: f64,
}

fn factor(grams: &[DMatrix<f64>], n: usize, jitter: Option<f64>) -> Result<(DMatrix<f64>, f64)> {
    let mut k = DMatrix::zeros(n, n);
    for g in grams {
        k += g;
    }
    let base = resolve_jitter(&k, jitter);
    cholesky_with_jitter(&k, base)
}

struct Problem<'a> {
    source: Source<'a>,
    ctx: LikelihoodContext,
    jitter: Option<f64>,
    n: usize,
}

impl Problem<'_> {
    fn features(&self, banks: &FilterBanks) -> Result<Vec<HodgeletFeatures>> {
        match &self.source {
            Source::Fixed(f) => Ok(f.to_vec()),
            Source::Spectral(s) => s.par_iter().map(|sig| sig.features(banks)).collect(),
        }
    }

    fn state(&self, hyper: Hyper) -> Result<State> {
        let features = self.features(&hyper.banks)?;
        let term_grams: Vec<DMatrix<f64>> = hyper
            .kernel
            .terms
            .iter()
            .map(|(t, p)| term_gram(*t, p, &features))
            .collect();
        let (l, jitter) = factor(&term_grams, self.n, self.jitter)?;
        Ok(State {
            hyper,
            features,
            term_grams,
            l,
            jitter,
        })
    }

    /// ELBO at `q` after moving one hyperparameter to `x`. Only the affected
    /// term Gram (and for filter scales, the affected feature column) is
    /// recomputed.
    fn perturbed_elbo(&self, state: &State, q: &[Whitened], slot: Slot, k: usize, x: f64) -> Result<f64> {
        let mut hyper = state.hyper.clone();
        hyper.set(slot, k, x);
        let (term, gram) = match slot {
            Slot::Kernel { term } => {
                let (t, p) = &hyper.kernel.terms[term];
                (term, term_gram(*t, p, &state.features))
            }
            Slot::Filter { term, filter } => {
                let Source::Spectral(sigs) = &self.source else {
                    unreachable!("filter slots exist only for spectral sources")
                };
                let (t, bank) = &hyper.banks.entries[term];
                let w = bank.num_filters;
                let column: Vec<HodgeletFeatures> = sigs
                    .iter()
                    .zip(&state.features)
                    .map(|(sig, f)| {
                        let mut values = f.get(*t).to_vec();
                        for (d, v) in sig.filter_norms(term, bank, filter).into_iter().enumerate() {
                            values[d * w + filter] = v;
                        }
                        HodgeletFeatures {
                            terms: vec![(*t, values)],
                        }
                    })
                    .collect();
                (term, term_gram(*t, &hyper.kernel.terms[term].1, &column))
            }
        };
        let mut grams = state.term_grams.clone();
        grams[term] = gram;
        let (l, _) = factor(&grams, self.n, self.jitter)?;
        Ok(variational::elbo(&l, q, &self.ctx, false).value)
    }

    fn fd_gradient(&self, state: &State, q: &[Whitened], h: f64) -> Vec<f64> {
        let slots = state.hyper.slots();
        slots
            .par_iter()
            .map(|&(slot, k)| {
                let x = state.hyper.get(slot, k);
                let up = self.perturbed_elbo(state, q, slot, k, x + h);
                let down = self.perturbed_elbo(state, q, slot, k, x - h);
                match (up, down) {
                    (Ok(u), Ok(d)) => (u - d) / (2.0 * h),
                    _ => 0.0,
                }
            })
            .collect()
    }
}

/// Adam on the whitened parameters. Leaves `q` at the best iterate seen
/// (including the starting point) and returns its ELBO.
fn inner_solve(l: &DMatrix<f64>, q: &mut [Whitened], ctx: &LikelihoodContext, iters: usize, lr: f64) -> f64 {
    let mut params = Vec::new();
    for latent in q.iter() {
        latent.pack(&mut params);
    }
    let unpack = |q: &mut [Whitened], p: &[f64]| {
        let mut offset = 0;
        for latent in q.iter_mut() {
            offset += latent.unpack(&p[offset..]);
        }
    };
    let mut best = (f64::NEG_INFINITY, params.clone());
    let mut adam = Adam::new(params.len(), lr);
    for step in 0..=iters {
        let eval = variational::elbo(l, q, ctx, step < iters);
        if eval.value > best.0 {
            best = (eval.value, params.clone());
        }
        let Some(grad) = eval.grad else { break };
        if grad.iter().any(|g| !g.is_finite()) {
            break;
        }
        adam.ascend(&mut params, &grad);
        unpack(q, &params);
    }
    unpack(q, &best.1);
    best.0
}

fn train(
    problem: &Problem<'_>,
    hyper: Hyper,
    spec: ModelSpec,
    config: &TrainConfig,
    labels: &[usize],
    classes: usize,
) -> Result<GpModel> {
    let mut state = problem.state(hyper)?;
    let latents = problem.ctx.likelihood.num_latents();
    let mut q = vec![Whitened::prior(problem.n); latents];
    let mut current = inner_solve(&state.l, &mut q, &problem.ctx, config.inner_iters, config.inner_learning_rate);
    if !current.is_finite() {
        return Err(Error::NonFiniteElbo {
            iteration: 0,
            snapshot: state.hyper.to_vec(),
        });
    }
    let mut trace = vec![current];
    let mut theta = state.hyper.to_vec();
    let mut adam = Adam::new(theta.len(), config.outer_learning_rate);
    let mut grad: Option<Vec<f64>> = None;
    for iteration in 1..=config.max_outer_iters {
        if theta.is_empty() {
            break;
        }
        let g = match grad.take() {
            Some(g) => g,
            None => problem.fd_gradient(&state, &q, config.fd_step),
        };
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteElbo {
                iteration,
                snapshot: theta,
            });
        }
        let mut candidate = theta.clone();
        adam.ascend(&mut candidate, &g);
        candidate.iter_mut().for_each(|x| *x = x.clamp(-LOG_BOUND, LOG_BOUND));
        let mut hyper = state.hyper.clone();
        hyper.set_vec(&candidate);
        let accepted = match problem.state(hyper) {
            Ok(cand_state) => {
                let mut cand_q = q.clone();
                let value = inner_solve(
                    &cand_state.l,
                    &mut cand_q,
                    &problem.ctx,
                    config.refine_iters,
                    config.inner_learning_rate,
                );
                if value.is_nan() {
                    return Err(Error::NonFiniteElbo {
                        iteration,
                        snapshot: candidate,
                    });
                }
                (value >= current).then_some((cand_state, cand_q, value))
            }
            Err(Error::Numerical { .. }) => None,
            Err(e) => return Err(e),
        };
        match accepted {
            Some((cand_state, cand_q, value)) => {
                let change = (value - current) / current.abs().max(1e-12);
                debug!("outer {iteration}: ELBO {current:.6} -> {value:.6}");
                state = cand_state;
                q = cand_q;
                theta = candidate;
                current = value;
                trace.push(value);
                if change < config.tolerance {
                    break;
                }
            }
            None => {
                grad = Some(g);
                adam.learning_rate *= 0.5;
                debug!("outer {iteration}: step rejected, learning rate {:.2e}", adam.learning_rate);
                if adam.learning_rate < config.outer_learning_rate * 1e-3 {
                    break;
                }
            }
        }
    }
    let posteriors = q
        .iter()
        .map(|w| {
            let (m, s) = w.unwhiten(&state.l);
            LatentPosterior::from_matrices(&m, &s)
        })
        .collect();
    Ok(GpModel {
        format_version: FORMAT_VERSION,
        spec,
        config: config.clone(),
        kernel_params: state.hyper.kernel,
        filter_banks: state.hyper.banks,
        classes,
        jitter: state.jitter,
        latents: posteriors,
        train_features: state.features,
        train_labels: labels.to_vec(),
        rng_seed: config.seed,
        elbo_trace: trace,
    })
}

fn check_signatures(signatures: &[SpectralSignature]) -> Result<()> {
    let shape = |s: &SpectralSignature| -> Vec<(Subspace, usize)> {
        s.blocks.iter().map(|(t, b)| (*t, b.coeff_sq.len())).collect()
    };
    if let Some(first) = signatures.first() {
        let expected = shape(first);
        if signatures.iter().any(|s| shape(s) != expected) {
            return Err(Error::contract("graphs do not share feature dimensionalities"));
        }
    }
    Ok(())
}

/// Feature terms for a dataset under `spec`, from the signal dimensions of
/// its first graph.
pub fn terms_for(dataset: &[LabeledComplex], spec: &ModelSpec) -> Result<Vec<Subspace>> {
    let first = dataset.first().ok_or_else(|| Error::contract("empty dataset"))?;
    let (dv, de) = (first.vertex_dims(), first.edge_dims());
    if dataset.iter().any(|g| g.vertex_dims() != dv || g.edge_dims() != de) {
        return Err(Error::contract("graphs do not share feature dimensionalities"));
    }
    let terms = feature_terms(spec.hodge, dv > 0, de > 0);
    if terms.is_empty() {
        return Err(Error::contract("graphs carry neither vertex nor edge signals"));
    }
    Ok(terms)
}

/// Spectral signatures of a dataset for the terms `spec` implies.
pub fn signatures_for(dataset: &[LabeledComplex], spec: &ModelSpec) -> Result<Vec<SpectralSignature>> {
    let terms = terms_for(dataset, spec)?;
    dataset_signatures(dataset, &terms, spec.augment_triangles)
}

/// Trains on graphs. Spectra are computed once; see [`fit_signatures`] to
/// reuse them across runs.
pub fn fit(dataset: &[LabeledComplex], spec: &ModelSpec, config: &TrainConfig) -> Result<GpModel> {
    let signatures = signatures_for(dataset, spec)?;
    let labels: Vec<usize> = dataset.iter().map(|g| g.label).collect();
    fit_signatures(&signatures, &labels, spec, config)
}

/// Trains on precomputed spectral signatures.
pub fn fit_signatures(
    signatures: &[SpectralSignature],
    labels: &[usize],
    spec: &ModelSpec,
    config: &TrainConfig,
) -> Result<GpModel> {
    spec.validate()?;
    config.validate()?;
    if signatures.len() != labels.len() {
        return Err(Error::contract("one label per graph is required"));
    }
    let classes = check_labels(labels)?;
    check_signatures(signatures)?;
    let terms: Vec<Subspace> = signatures[0].blocks.iter().map(|b| b.0).collect();
    let lambda_max = |d: Domain| {
        let m = signatures.iter().map(|s| s.max_eigenvalue(d)).fold(0.0, f64::max);
        if m > 0.0 {
            m
        } else {
            1.0
        }
    };
    let banks = FilterBanks::initialized(&terms, spec.num_filters, spec.num_scales, lambda_max)?;
    let features: Vec<HodgeletFeatures> = signatures
        .par_iter()
        .map(|s| s.features(&banks))
        .collect::<Result<_>>()?;
    let kernel = initial_kernel_params(&terms, &features, spec.kernel)?;
    let problem = Problem {
        source: Source::Spectral(signatures),
        ctx: LikelihoodContext::new(
            likelihood_for(classes),
            labels.to_vec(),
            config.quadrature_nodes,
            config.mc_samples,
            config.seed,
        ),
        jitter: config.jitter,
        n: labels.len(),
    };
    let hyper = Hyper {
        kernel,
        banks,
        learn_kernel: spec.learn_kernel,
        learn_filters: spec.learn_filters,
    };
    train(&problem, hyper, spec.clone(), config, labels, classes)
}

/// Trains directly on feature vectors with a fixed layout (no filter
/// learning). `kernel` gives initial hyperparameters; `None` uses
/// [`initial_kernel_params`].
pub fn fit_features(
    features: &[HodgeletFeatures],
    labels: &[usize],
    kernel: Option<KernelParams>,
    base: BaseKernel,
    config: &TrainConfig,
) -> Result<GpModel> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::contract("one label per feature vector is required"));
    }
    let classes = check_labels(labels)?;
    let layout = features[0].layout();
    if features.iter().any(|f| f.layout() != layout) {
        return Err(Error::contract("feature layouts differ across points"));
    }
    let terms: Vec<Subspace> = layout.iter().map(|l| l.0).collect();
    let kernel = match kernel {
        Some(k) => k,
        None => initial_kernel_params(&terms, features, base)?,
    };
    let problem = Problem {
        source: Source::Fixed(features),
        ctx: LikelihoodContext::new(
            likelihood_for(classes),
            labels.to_vec(),
            config.quadrature_nodes,
            config.mc_samples,
            config.seed,
        ),
        jitter: config.jitter,
        n: labels.len(),
    };
    let hyper = Hyper {
        kernel,
        banks: FilterBanks { entries: Vec::new() },
        learn_kernel: true,
        learn_filters: false,
    };
    let spec = ModelSpec {
        kernel: base,
        learn_filters: false,
        ..ModelSpec::default()
    };
    train(&problem, hyper, spec, config, labels, classes)
}

impl GpModel {
    /// A model whose posterior equals the prior (`m = 0`, `S = K`).
    pub fn prior(
        kernel_params: KernelParams,
        train_features: Vec<HodgeletFeatures>,
        train_labels: Vec<usize>,
        classes: usize,
        config: &TrainConfig,
    ) -> Result<Self> {
        if classes < 2 || train_labels.iter().any(|&y| y >= classes) {
            return Err(Error::contract("labels must lie in 0..classes with classes >= 2"));
        }
        let n = train_features.len();
        let grams: Vec<DMatrix<f64>> = kernel_params
            .terms
            .iter()
            .map(|(t, p)| term_gram(*t, p, &train_features))
            .collect();
        let (l, jitter) = factor(&grams, n, config.jitter)?;
        let latents = (0..likelihood_for(classes).num_latents())
            .map(|_| LatentPosterior::from_matrices(&DVector::zeros(n), &l))
            .collect();
        Ok(Self {
            format_version: FORMAT_VERSION,
            spec: ModelSpec::default(),
            config: config.clone(),
            kernel_params,
            filter_banks: FilterBanks { entries: Vec::new() },
            classes,
            jitter,
            latents,
            train_features,
            train_labels,
            rng_seed: config.seed,
            elbo_trace: Vec::new(),
        })
    }

    pub fn likelihood(&self) -> Likelihood {
        likelihood_for(self.classes)
    }

    fn train_gram(&self) -> DMatrix<f64> {
        let n = self.train_features.len();
        let mut k = DMatrix::zeros(n, n);
        for (t, p) in &self.kernel_params.terms {
            k += term_gram(*t, p, &self.train_features);
        }
        k
    }

    /// Cholesky factor of the training Gram matrix with the model's jitter.
    fn train_factor(&self) -> Result<Cholesky<f64, Dyn>> {
        let mut k = self.train_gram();
        for i in 0..k.nrows() {
            k[(i, i)] += self.jitter;
        }
        Cholesky::new(k).ok_or_else(|| Error::numerical("Gram Cholesky", "training Gram matrix is not positive definite"))
    }

    /// Latent predictive means and variances, `[point][latent]`.
    pub fn predict_latent(&self, features: &[HodgeletFeatures]) -> Result<Vec<Vec<(f64, f64)>>> {
        let layout = self
            .train_features
            .first()
            .map(|f| f.layout())
            .unwrap_or_default();
        if let Some(bad) = features.iter().find(|f| f.layout() != layout) {
            return Err(Error::contract(format!(
                "feature layout {:?} does not match the training layout {:?}",
                bad.layout(),
                layout
            )));
        }
        let chol = self.train_factor()?;
        let t = features.len();
        let mut cross = DMatrix::zeros(t, self.train_features.len());
        for (term, p) in &self.kernel_params.terms {
            cross += cross_term_gram(*term, p, features, &self.train_features, false);
        }
        let prior_var = self.kernel_params.total_variance();
        let w = chol.solve(&cross.transpose());
        let reduction: Vec<f64> = (0..t).map(|i| cross.row(i).transpose().dot(&w.column(i))).collect();
        let mut out = vec![Vec::with_capacity(self.latents.len()); t];
        for latent in &self.latents {
            let m = latent.mean_vector();
            let s = latent.chol_matrix();
            let spread = s.tr_mul(&w);
            for i in 0..t {
                let mean = w.column(i).dot(&m);
                let var = prior_var - reduction[i] + spread.column(i).norm_squared();
                out[i].push((mean, var.max(1e-12)));
            }
        }
        Ok(out)
    }

    /// Class probabilities for feature vectors; each row sums to 1.
    pub fn predict_proba_features(&self, features: &[HodgeletFeatures]) -> Result<Vec<Vec<f64>>> {
        let latent = self.predict_latent(features)?;
        match self.likelihood() {
            Likelihood::BernoulliLogit => {
                let rule = crate::quadrature::gauss_hermite(self.config.quadrature_nodes);
                Ok(latent
                    .iter()
                    .map(|l| {
                        let (m, v) = l[0];
                        let p1 = crate::quadrature::gaussian_expectation(&rule, m, v, likelihood::sigmoid);
                        let p1 = p1.clamp(0.0, 1.0);
                        vec![1.0 - p1, p1]
                    })
                    .collect())
            }
            _ => {
                let c = self.classes;
                let s = self.config.mc_samples;
                let draws = likelihood::standard_normal_draws(self.rng_seed ^ 0x5851_f42d_4c95_7f2d, latent.len() * s * c);
                Ok(latent
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        let mut p = vec![0.0; c];
                        let mut f = vec![0.0; c];
                        for k in 0..s {
                            let eps = &draws[(i * s + k) * c..(i * s + k + 1) * c];
                            for j in 0..c {
                                f[j] = l[j].0 + l[j].1.sqrt() * eps[j];
                            }
                            let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                            let z: f64 = f.iter().map(|x| (x - fmax).exp()).sum();
                            for j in 0..c {
                                p[j] += (f[j] - fmax).exp() / z;
                            }
                        }
                        let total: f64 = p.iter().sum();
                        p.iter().map(|x| x / total).collect()
                    })
                    .collect())
            }
        }
    }

    /// Spectral signatures of new graphs, for the model's terms.
    pub fn signatures(&self, graphs: &[LabeledComplex]) -> Result<Vec<SpectralSignature>> {
        if self.filter_banks.entries.is_empty() {
            return Err(Error::contract("model was fitted on raw features and has no filter banks"));
        }
        dataset_signatures(graphs, &self.filter_banks.terms(), self.spec.augment_triangles)
    }

    pub fn predict_proba_signatures(&self, signatures: &[SpectralSignature]) -> Result<Vec<Vec<f64>>> {
        let features = signatures
            .par_iter()
            .map(|s| s.features(&self.filter_banks))
            .collect::<Result<Vec<_>>>()?;
        self.predict_proba_features(&features)
    }

    pub fn predict_proba(&self, graphs: &[LabeledComplex]) -> Result<Vec<Vec<f64>>> {
        self.predict_proba_signatures(&self.signatures(graphs)?)
    }

    /// ELBO of the stored posterior, recomputed from scratch.
    pub fn elbo(&self) -> Result<f64> {
        let l = self.train_factor()?.l();
        let q = self
            .latents
            .iter()
            .map(|lp| {
                Whitened::whiten(&l, &lp.mean_vector(), &lp.chol_matrix())
                    .ok_or_else(|| Error::numerical("ELBO", "singular Cholesky factor"))
            })
            .collect::<Result<Vec<_>>>()?;
        let ctx = LikelihoodContext::new(
            self.likelihood(),
            self.train_labels.clone(),
            self.config.quadrature_nodes,
            self.config.mc_samples,
            self.rng_seed,
        );
        Ok(variational::elbo(&l, &q, &ctx, false).value)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.format_version != FORMAT_VERSION {
            return Err(Error::contract(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                model.format_version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `argmax` of each probability row.
pub fn predicted_classes(proba: &[Vec<f64>]) -> Vec<usize> {
    proba
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
                .0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(x: &[f64]) -> HodgeletFeatures {
        HodgeletFeatures {
            terms: vec![(Subspace::VertexFull, x.to_vec())],
        }
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            max_outer_iters: 10,
            inner_iters: 100,
            refine_iters: 20,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn prior_posterior_has_zero_kl() {
        let feats: Vec<_> = [0.0, 0.5, 2.0].iter().map(|&x| point(&[x])).collect();
        let kp = initial_kernel_params(&[Subspace::VertexFull], &feats, BaseKernel::SquaredExponential).unwrap();
        let model = GpModel::prior(kp, feats, vec![0, 1, 0], 2, &TrainConfig::default()).unwrap();
        let l = model.train_factor().unwrap().l();
        let q = Whitened::whiten(&l, &model.latents[0].mean_vector(), &model.latents[0].chol_matrix()).unwrap();
        assert_eq!(q.kl(), 0.0);
    }

    #[test]
    fn single_point_expected_log_likelihood() {
        // ∫ N(f; 0, 1) log σ(f) df by a fine trapezoid rule.
        let (a, b, steps) = (-12.0f64, 12.0f64, 240_000);
        let h = (b - a) / steps as f64;
        let oracle: f64 = (0..=steps)
            .map(|i| {
                let f = a + i as f64 * h;
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * h * (-0.5 * f * f).exp() / (2.0 * std::f64::consts::PI).sqrt() * likelihood::log_sigmoid(f)
            })
            .sum();
        assert!((oracle + 0.80606).abs() < 5e-5);
        let kp = KernelParams::new(vec![(Subspace::VertexFull, TermParams::new(BaseKernel::SquaredExponential, 1.0, 1.0))]).unwrap();
        let config = TrainConfig {
            jitter: Some(0.0),
            ..TrainConfig::default()
        };
        let model = GpModel::prior(kp, vec![point(&[0.0])], vec![1], 2, &config).unwrap();
        assert!((model.elbo().unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn separable_clusters_are_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let c = i % 2;
            let centre = if c == 0 { 0.0 } else { 10.0 };
            feats.push(point(&[centre + rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)]));
            labels.push(c);
        }
        let kp = KernelParams::new(vec![(Subspace::VertexFull, TermParams::new(BaseKernel::SquaredExponential, 1.0, 1.0))]).unwrap();
        let model = fit_features(&feats, &labels, Some(kp), BaseKernel::SquaredExponential, &quick()).unwrap();
        let pred = predicted_classes(&model.predict_proba_features(&feats).unwrap());
        assert_eq!(pred, labels);
        assert!(model.elbo_trace.windows(2).all(|w| w[1] >= w[0]));
        assert!((model.elbo().unwrap() - model.elbo_trace.last().unwrap()).abs() < 1e-8);
    }

    #[test]
    fn identical_points_with_opposite_labels_stay_undecided() {
        let feats = vec![point(&[1.0, 2.0]), point(&[1.0, 2.0])];
        let model = fit_features(&feats, &[0, 1], None, BaseKernel::SquaredExponential, &quick()).unwrap();
        let p = model.predict_proba_features(&feats[..1]).unwrap();
        assert!((p[0][0] - 0.5).abs() < 0.05 && (p[0][1] - 0.5).abs() < 0.05);
    }

    #[test]
    fn three_class_prior_is_uniform() {
        let feats: Vec<_> = (0..6).map(|i| point(&[i as f64])).collect();
        let kp = initial_kernel_params(&[Subspace::VertexFull], &feats, BaseKernel::SquaredExponential).unwrap();
        let config = TrainConfig {
            mc_samples: 4096,
            ..TrainConfig::default()
        };
        let model = GpModel::prior(kp, feats, vec![0, 1, 2, 0, 1, 2], 3, &config).unwrap();
        let probe: Vec<_> = (0..20).map(|i| point(&[i as f64 * 0.3])).collect();
        for row in model.predict_proba_features(&probe).unwrap() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|p| (p - 1.0 / 3.0).abs() < 0.02), "{row:?}");
        }
    }

    #[test]
    fn multiclass_training_is_deterministic() {
        let feats: Vec<_> = (0..9).map(|i| point(&[(i % 3) as f64 * 4.0 + 0.1 * i as f64])).collect();
        let labels: Vec<usize> = (0..9).map(|i| i % 3).collect();
        let config = TrainConfig {
            max_outer_iters: 3,
            inner_iters: 50,
            refine_iters: 10,
            mc_samples: 16,
            ..TrainConfig::default()
        };
        let a = fit_features(&feats, &labels, None, BaseKernel::SquaredExponential, &config).unwrap();
        let b = fit_features(&feats, &labels, None, BaseKernel::SquaredExponential, &config).unwrap();
        assert_eq!(a, b);
        let back = GpModel::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, back);
        assert_eq!(predicted_classes(&a.predict_proba_features(&feats).unwrap()), labels);
    }

    #[test]
    fn contracts() {
        let feats = vec![point(&[0.0]), point(&[1.0])];
        assert!(matches!(
            fit_features(&feats, &[0, 0], None, BaseKernel::SquaredExponential, &quick()),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            fit_features(&feats, &[0, 2], None, BaseKernel::SquaredExponential, &quick()),
            Err(Error::Contract(_))
        ));
        let model = fit_features(&feats, &[0, 1], None, BaseKernel::SquaredExponential, &quick()).unwrap();
        assert!(model.predict_proba_features(&[point(&[0.0, 1.0])]).is_err());
        let bad = TrainConfig {
            mc_samples: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
