//! Frequency responses of an initialised filter bank, and the wavelet
//! coefficients of a vertex signal on a path graph.
//!
//! ```text
//! cargo run --example wavelet_filters
//! ```

use hodgelet::spectral::wavelet_coefficients;
use hodgelet::{Domain, FilterBank, HodgeSpectrum, OrientedComplex};
use nalgebra::DVector;

fn main() -> hodgelet::Result<()> {
    let n = 12;
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|v| (v, v + 1)).collect();
    let complex = OrientedComplex::build(n, &edges)?;
    let spectrum = HodgeSpectrum::compute(&complex)?;
    let lambda_max = spectrum.max_eigenvalue(Domain::Vertex);
    let bank = FilterBank::initialized(Domain::Vertex, 4, 3, lambda_max)?;

    println!("lambda_max = {lambda_max:.4}");
    println!("{:>8} {:>9} {:>9} {:>9} {:>9}", "lambda", "w0", "w1", "w2", "w3");
    for k in 0..=10 {
        let lambda = lambda_max * k as f64 / 10.0;
        let row: Vec<String> = (0..bank.num_filters)
            .map(|j| format!("{:9.4}", bank.response(j, lambda)))
            .collect();
        println!("{lambda:8.4} {}", row.join(" "));
    }

    // A spike in the middle of the path.
    let mut x = DVector::zeros(n);
    x[n / 2] = 1.0;
    for j in 0..bank.num_filters {
        let c = wavelet_coefficients(&x, &spectrum.vertex_coexact, &bank, j)?;
        println!("filter {j}: |coefficients| = {:.4}", c.norm());
    }
    Ok(())
}
