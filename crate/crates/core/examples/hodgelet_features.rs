//! Hodgelet features of a graph with vertex and edge signals, and their
//! invariance under vertex relabelling and edge re-orientation.
//!
//! ```text
//! cargo run --example hodgelet_features
//! ```

use hodgelet::features::{extract_features, feature_terms};
use hodgelet::{Domain, FilterBanks, HodgeSpectrum, LabeledComplex, OrientedComplex};
use nalgebra::DMatrix;

fn main() -> hodgelet::Result<()> {
    // Two triangles sharing an edge plus a pendant 4-cycle.
    let edges = [(0, 1), (1, 2), (0, 2), (2, 3), (1, 3), (3, 4), (4, 5), (5, 6), (6, 3)];
    let complex = OrientedComplex::build(7, &edges)?;
    let vertex = DMatrix::from_row_slice(1, 7, &[1.0, 0.5, -0.3, 2.0, 0.0, 1.5, -1.0]);
    let edge = DMatrix::from_fn(1, complex.num_edges(), |_, e| (e as f64 * 0.7).sin());
    let graph = LabeledComplex::new(complex, vertex, edge, 0)?;

    let spectrum = HodgeSpectrum::compute(&graph.complex)?;
    let terms = feature_terms(true, true, true);
    let banks = FilterBanks::initialized(&terms, 4, 3, |d| spectrum.max_eigenvalue(d).max(1e-12))?;
    let features = extract_features(&graph, &spectrum, &banks)?;
    for (term, values) in &features.terms {
        let shown: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
        println!("{:>2}: [{}]", term.short_name(), shown.join(", "));
    }
    assert_eq!(Domain::Edge, terms[2].domain());

    let perm = [3, 6, 0, 5, 1, 4, 2];
    let relabeled = graph.relabel(&perm)?;
    let flip: Vec<bool> = (0..relabeled.complex.num_edges()).map(|e| e % 3 == 0).collect();
    let moved = relabeled.flip_edges(&flip)?;
    let moved_features = extract_features(&moved, &HodgeSpectrum::compute(&moved.complex)?, &banks)?;
    println!(
        "max difference after relabelling and flipping: {:.2e}",
        features.max_abs_diff(&moved_features)
    );
    Ok(())
}
