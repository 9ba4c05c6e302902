mod common;

use common::*;
use hodgelet::datagen::{generate_ring_vs_clique, generate_sbm, generate_vector_field_dataset, RingVsCliqueConfig, SbmConfig, VectorFieldConfig};
use hodgelet::features::{dataset_signatures, feature_terms};
use hodgelet::gpclf::likelihood::{Likelihood, LikelihoodContext};
use hodgelet::gpclf::{fit, fit_features};
use hodgelet::{BaseKernel, HodgeletFeatures, ModelSpec, OrientedComplex, Subspace, TrainConfig};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn boundary_of_boundary_vanishes(seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed));
        prop_assert_eq!(incidence_defect(&g.complex), 0.0);
    }

    #[test]
    fn hodge_blocks_match_laplacian_null_spaces(seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed));
        let (direct, blocks) = betti(&g.complex);
        prop_assert_eq!(direct, blocks);
    }
}

proptest! {
    #![proptest_config(config(40))]

    #[test]
    fn parseval_and_orthogonality(seed in any::<u64>()) {
        let (parseval, ortho) = spectral_defects(&random_graph(&mut rng(seed)));
        prop_assert!(parseval <= 1e-8, "parseval {parseval:e}");
        prop_assert!(ortho <= 1e-8, "orthogonality {ortho:e}");
    }

    #[test]
    fn features_ignore_labelling_and_orientation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r);
        let d = invariance_defect(&g, &mut r);
        prop_assert!(d <= 1e-9, "defect {d:e}");
    }

    #[test]
    fn gram_is_positive_semidefinite(seed in any::<u64>()) {
        let mut r = rng(seed);
        let graphs: Vec<_> = (0..12).map(|_| random_graph(&mut r)).collect();
        let banks = default_banks(6.0);
        let features: Vec<HodgeletFeatures> = graphs.iter().map(|g| features_of(g, &banks)).collect();
        let params = random_kernel(&mut r);
        prop_assert!(gram_min_eigenvalue(&params, &features) >= -1e-8);
    }

    #[test]
    fn variational_gradient_matches_differences(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let l = random_factor(&mut r, n);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let ctx = LikelihoodContext::new(Likelihood::BernoulliLogit, labels, 20, 64, seed);
        let q = [random_whitened(&mut r, n)];
        let d = variational_gradient_defect(&l, &q, &ctx);
        prop_assert!(d <= 1e-4, "defect {d:e}");
    }

    #[test]
    fn surrogate_elbo_is_bounded_by_evidence(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let l = random_factor(&mut r, n);
        let k = &l * l.transpose();
        let targets: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let evidence = gaussian_evidence(&k, 0.5, &targets);
        let q = random_whitened(&mut r, n);
        prop_assert!(surrogate_elbo(&l, &q, 0.5, &targets) <= evidence + 1e-10);
        let best = exact_gaussian_posterior(&l, 0.5, &targets);
        prop_assert!((surrogate_elbo(&l, &best, 0.5, &targets) - evidence).abs() <= 1e-8);
    }
}

#[test]
fn softmax_gradient_matches_differences() {
    let mut r = rng(11);
    let n = 5;
    let l = random_factor(&mut r, n);
    let ctx = LikelihoodContext::new(Likelihood::Softmax { classes: 3 }, vec![0, 1, 2, 1, 0], 20, 256, 3);
    let q: Vec<_> = (0..3).map(|_| random_whitened(&mut r, n)).collect();
    assert!(variational_gradient_defect(&l, &q, &ctx) <= 1e-4);
}

#[test]
fn betti_numbers_of_fixtures() {
    let cycle = OrientedComplex::build(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
    let filled = OrientedComplex::build(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let two = OrientedComplex::build(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5)]).unwrap();
    let hollow = filled.without_triangles();
    for (complex, expected) in [(&cycle, (1, 1)), (&filled, (1, 0)), (&two, (2, 0)), (&hollow, (1, 1))] {
        let (direct, blocks) = betti(complex);
        assert_eq!(direct, expected);
        assert_eq!(blocks, expected);
    }
}

#[test]
fn generators_are_deterministic() {
    let vf = VectorFieldConfig {
        mesh_vertices: 20,
        num_graphs: 6,
        seed: 4,
        ..VectorFieldConfig::default()
    };
    assert_eq!(generate_vector_field_dataset(&vf).unwrap(), generate_vector_field_dataset(&vf).unwrap());
    let rc = RingVsCliqueConfig {
        num_graphs: 6,
        ..RingVsCliqueConfig::default()
    };
    assert_eq!(generate_ring_vs_clique(&rc).unwrap(), generate_ring_vs_clique(&rc).unwrap());
    let sbm = SbmConfig {
        num_graphs: 6,
        ..SbmConfig::default()
    };
    assert_eq!(generate_sbm(&sbm).unwrap(), generate_sbm(&sbm).unwrap());
}

#[test]
fn fit_and_predict_are_bit_deterministic() {
    let data = generate_ring_vs_clique(&RingVsCliqueConfig {
        num_graphs: 16,
        ..RingVsCliqueConfig::default()
    })
    .unwrap();
    let config = TrainConfig {
        max_outer_iters: 4,
        inner_iters: 60,
        ..TrainConfig::default()
    };
    let a = fit(&data.graphs, &ModelSpec::default(), &config).unwrap();
    let b = fit(&data.graphs, &ModelSpec::default(), &config).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.predict_proba(&data.graphs).unwrap(), b.predict_proba(&data.graphs).unwrap());
}

#[test]
fn multiclass_fit_is_bit_deterministic() {
    let mut r = rng(5);
    let graphs: Vec<_> = (0..9).map(|_| random_graph(&mut r)).collect();
    let terms = feature_terms(true, true, true);
    let sigs = dataset_signatures(&graphs, &terms, true).unwrap();
    let banks = default_banks(6.0);
    let features: Vec<_> = sigs.iter().map(|s| s.features(&banks).unwrap()).collect();
    let labels: Vec<usize> = (0..9).map(|i| i % 3).collect();
    let config = TrainConfig {
        max_outer_iters: 3,
        inner_iters: 40,
        mc_samples: 32,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = fit_features(&features, &labels, None, BaseKernel::SquaredExponential, &config).unwrap();
    let b = fit_features(&features, &labels, None, BaseKernel::SquaredExponential, &config).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(
        a.predict_proba_features(&features).unwrap(),
        b.predict_proba_features(&features).unwrap()
    );
    assert_eq!(a.kernel_params.terms.len(), 5);
    assert!(a.kernel_params.terms.iter().any(|(t, _)| *t == Subspace::EdgeHarmonic));
}
