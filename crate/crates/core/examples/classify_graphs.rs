//! Train a Hodgelet GP classifier on rings versus rings with a planted
//! clique, evaluate it on held-out graphs and round-trip the model through
//! JSON.
//!
//! ```text
//! cargo run --release --example classify_graphs
//! ```

use hodgelet::datagen::{generate_ring_vs_clique, RingVsCliqueConfig};
use hodgelet::gpclf::{fit, predicted_classes};
use hodgelet::harness::stratified_split;
use hodgelet::{GpModel, ModelSpec, TrainConfig};

fn main() -> hodgelet::Result<()> {
    let data = generate_ring_vs_clique(&RingVsCliqueConfig {
        num_graphs: 60,
        ..RingVsCliqueConfig::default()
    })?;
    let labels = data.labels();
    let (train, test) = stratified_split(&labels, 0.8, 7);
    let pick = |idx: &[usize]| idx.iter().map(|&i| data.graphs[i].clone()).collect::<Vec<_>>();
    let (train_graphs, test_graphs) = (pick(&train), pick(&test));

    let config = TrainConfig {
        max_outer_iters: 20,
        ..TrainConfig::default()
    };
    let model = fit(&train_graphs, &ModelSpec::default(), &config)?;
    println!("ELBO trace: {:.3?}", model.elbo_trace);
    for (term, p) in &model.kernel_params.terms {
        println!("{}: variance {:.3}, lengthscale {:.3}", term.short_name(), p.variance(), p.lengthscale());
    }

    let proba = model.predict_proba(&test_graphs)?;
    let predicted = predicted_classes(&proba);
    let correct = predicted.iter().zip(&test).filter(|(p, &i)| **p == labels[i]).count();
    println!("test accuracy {correct}/{}", test.len());

    let restored = GpModel::from_json(&model.to_json()?)?;
    assert_eq!(restored.predict_proba(&test_graphs)?, proba);
    println!("restored model reproduces the predictions exactly");
    Ok(())
}
