//! Incidence matrices, Betti numbers and the Hodge split of an edge flow on a
//! small complex: a square with one diagonal, where only one of the two
//! triangles is filled.
//!
//! ```text
//! cargo run --example hodge_decomposition
//! ```

use hodgelet::spectral::EigenBlock;
use hodgelet::{HodgeSpectrum, OrientedComplex};
use nalgebra::DVector;

fn main() -> hodgelet::Result<()> {
    // Edges 0-1, 1-2, 2-3, 0-3 and the diagonal 0-2. Building from the edge
    // list would fill both triangles, so the oriented form is used.
    let complex = OrientedComplex::from_oriented(
        4,
        vec![[0, 1], [0, 2], [0, 3], [1, 2], [2, 3]],
        vec![[0, 1, 2]],
    )?;
    println!("B1 =\n{}", complex.b1());
    println!("B2 =\n{}", complex.b2());
    println!("B1 * B2 =\n{}", complex.b1_f64() * complex.b2_f64());

    let spectrum = HodgeSpectrum::compute(&complex)?;
    println!("beta_0 = {}", spectrum.vertex_harmonic.rank());
    println!("beta_1 = {}", spectrum.edge_harmonic.rank());

    let flow = DVector::from_vec(vec![1.0, -0.5, 2.0, 0.3, 1.2]);
    let parts = [
        ("gradient", &spectrum.edge_exact),
        ("curl", &spectrum.edge_coexact),
        ("harmonic", &spectrum.edge_harmonic),
    ];
    let mut total = DVector::zeros(flow.len());
    for (name, block) in parts {
        let component = reconstruct(block, &flow);
        println!("{name:>9}: {:7.4?}  energy {:.4}", component.as_slice(), component.norm_squared());
        total += component;
    }
    println!("reconstruction error {:.2e}", (total - &flow).norm());
    Ok(())
}

fn reconstruct(block: &EigenBlock, x: &DVector<f64>) -> DVector<f64> {
    &block.eigenvectors * block.project(x)
}
