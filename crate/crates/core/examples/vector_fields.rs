//! Generate vector-field graphs on random meshes and show how the share of
//! edge energy in the gradient subspace tracks the mixing weight.
//!
//! ```text
//! cargo run --release --example vector_fields
//! ```

use hodgelet::datagen::vector_field::{generate_sample, VectorFieldConfig};
use hodgelet::HodgeSpectrum;

fn main() -> hodgelet::Result<()> {
    let config = VectorFieldConfig {
        num_graphs: 12,
        ..VectorFieldConfig::default()
    };
    println!("{:>5} {:>6} {:>7} {:>6} {:>9} {:>9}", "graph", "label", "mixing", "edges", "gradient", "curl");
    for i in 0..config.num_graphs {
        let sample = generate_sample(&config, i)?;
        let g = &sample.graph;
        let spectrum = HodgeSpectrum::compute(&g.complex)?;
        let x = g.edge_features.row(0).transpose();
        let exact = spectrum.edge_exact.project(&x).norm_squared();
        let coexact = spectrum.edge_coexact.project(&x).norm_squared();
        let total = x.norm_squared();
        println!(
            "{i:>5} {:>6} {:>7.3} {:>6} {:>9.3} {:>9.3}",
            g.label,
            sample.mixing,
            g.complex.num_edges(),
            exact / total,
            coexact / total
        );
    }
    Ok(())
}
