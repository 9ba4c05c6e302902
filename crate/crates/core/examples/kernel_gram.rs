//! The additive Hodgelet kernel on a handful of ring and ring-with-clique
//! graphs: initial hyperparameters, the Gram matrix and its spectrum.
//!
//! ```text
//! cargo run --example kernel_gram
//! ```

use hodgelet::datagen::{generate_ring_vs_clique, RingVsCliqueConfig};
use hodgelet::features::{dataset_signatures, feature_terms};
use hodgelet::gpclf::initial_kernel_params;
use hodgelet::kernel::gram_matrix;
use hodgelet::{BaseKernel, Domain, FilterBanks};

fn main() -> hodgelet::Result<()> {
    let data = generate_ring_vs_clique(&RingVsCliqueConfig {
        num_graphs: 6,
        ..RingVsCliqueConfig::default()
    })?;
    let terms = feature_terms(true, true, false);
    let signatures = dataset_signatures(&data.graphs, &terms, true)?;
    let lambda_max = signatures.iter().map(|s| s.max_eigenvalue(Domain::Vertex)).fold(0.0, f64::max);
    let banks = FilterBanks::initialized(&terms, 4, 3, |_| lambda_max)?;
    let features = signatures
        .iter()
        .map(|s| s.features(&banks))
        .collect::<hodgelet::Result<Vec<_>>>()?;

    let params = initial_kernel_params(&terms, &features, BaseKernel::SquaredExponential)?;
    for (term, p) in &params.terms {
        println!("{}: variance {:.3}, lengthscale {:.3}", term.short_name(), p.variance(), p.lengthscale());
    }
    let k = gram_matrix(&params, &features, None)?;
    println!("labels {:?}", data.labels());
    for row in k.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:6.3}")).collect();
        println!("{}", cells.join(" "));
    }
    let eig = k.symmetric_eigenvalues();
    println!("smallest eigenvalue {:.3e}", eig.min());
    Ok(())
}
