//! Accuracy of the Hodge and line-graph variants as edge noise grows, on a
//! reduced vector-field problem.
//!
//! ```text
//! cargo run --release --example noise_sweep
//! ```

use hodgelet::datagen::VectorFieldConfig;
use hodgelet::harness::{sweep_noise, DatasetSpec, ExperimentConfig, Variant};

fn main() -> hodgelet::Result<()> {
    let mut config = ExperimentConfig::new(DatasetSpec::VectorField(VectorFieldConfig {
        mesh_vertices: 60,
        num_graphs: 60,
        ..VectorFieldConfig::default()
    }));
    config.evaluation.num_seeds = 2;
    config.noise_levels = vec![0.0, 0.1, 0.4];
    config.train.max_outer_iters = 15;

    let output = sweep_noise(&config)?;
    println!("{:>6} {:>12} {:>9}", "noise", "wt-gp-hodge", "wt-gp-lg");
    for &r in &config.noise_levels {
        println!(
            "{r:>6.2} {:>12.1} {:>9.1}",
            output.mean(r, Variant::WtGpHodge),
            output.mean(r, Variant::WtGpLg)
        );
    }
    for warning in output.soft_checks(&config.noise_levels) {
        println!("note: {warning}");
    }
    Ok(())
}
