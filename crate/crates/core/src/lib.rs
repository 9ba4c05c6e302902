//! Hodgelet spectral features and variational Gaussian-process graph
//! classification.
//!
//! Vertex and edge signals on a graph are split into their Hodge components
//! (gradient, curl and harmonic parts), passed through trainable spectral
//! wavelet filter banks, and summarised as per-filter 2-norms. The resulting
//! Euclidean feature vectors feed an additive kernel with one base kernel per
//! Hodge subspace, and a full-rank variational GP classifier learns the
//! kernel hyperparameters and filter scales jointly.
//!
//! Module map:
//!
//! * [`topology`] oriented complexes, incidence matrices, Hodge Laplacians, line graphs
//! * [`spectral`] Hodge sub-eigenbases, wavelet filter banks, wavelet coefficients
//! * [`features`] permutation-invariant Hodgelet feature vectors
//! * [`kernel`] base kernels, the additive Hodgelet kernel and Gram matrices
//! * [`gpclf`] ELBO, training and prediction
//! * [`datagen`] TUDataset ingestion and synthetic generators (including vector fields on meshes)
//! * [`harness`] experiment configs, multi-seed runs, noise sweeps and CSV output

pub mod datagen;
pub mod error;
pub mod features;
pub mod gpclf;
pub mod harness;
pub mod kernel;
pub mod quadrature;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};
pub use features::{FilterBanks, HodgeletFeatures};
pub use gpclf::{GpModel, ModelSpec, TrainConfig};
pub use kernel::{BaseKernel, KernelParams};
pub use spectral::{Domain, FilterBank, HodgeSpectrum, Subspace};
pub use topology::{LabeledComplex, OrientedComplex};
