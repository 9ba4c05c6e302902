//! Writes Hodgelet features of a generated vector-field dataset as CSV
//! (one row per graph: label, mixing weight, then every feature).
//! Arguments: mesh size, noise level and field lengthscale.
//!
//! ```text
//! cargo run --release --example export_features -- 100 0.0 0.3 > features.csv
//! ```

use hodgelet::datagen::vector_field::{generate_sample, VectorFieldConfig};
use hodgelet::features::{dataset_signatures, feature_terms, FilterBanks};
use hodgelet::Domain;

fn main() -> hodgelet::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let noise: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let lengthscale: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let config = VectorFieldConfig {
        mesh_vertices: n,
        noise_level: noise,
        gp_lengthscale: lengthscale,
        ..VectorFieldConfig::default()
    };
    let samples = (0..config.num_graphs)
        .map(|i| generate_sample(&config, i))
        .collect::<hodgelet::Result<Vec<_>>>()?;
    let graphs: Vec<_> = samples.iter().map(|s| s.graph.clone()).collect();
    let terms = feature_terms(true, false, true);
    let signatures = dataset_signatures(&graphs, &terms, true)?;
    let lmax = signatures.iter().map(|s| s.max_eigenvalue(Domain::Edge)).fold(0.0, f64::max);
    let banks = FilterBanks::initialized(&terms, 4, 3, |_| lmax)?;
    let names: Vec<String> = terms
        .iter()
        .flat_map(|t| (0..4).map(move |j| format!("{}{j}", t.short_name())))
        .collect();
    println!("label,mixing,{}", names.join(","));
    for (s, sig) in samples.iter().zip(&signatures) {
        let f = sig.features(&banks)?;
        let values: Vec<String> = f.terms.iter().flat_map(|(_, v)| v.iter().map(|x| x.to_string())).collect();
        println!("{},{},{}", s.graph.label, s.mixing, values.join(","));
    }
    Ok(())
}
