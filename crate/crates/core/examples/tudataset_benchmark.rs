//! Load a TUDataset benchmark from disk and compare the Hodge and non-Hodge
//! variants over a few seeds.
//!
//! ```text
//! cargo run --release --example tudataset_benchmark -- crates/core/tests/data/MUTAG MUTAG 3
//! ```

use std::path::PathBuf;

use hodgelet::datagen::load_tudataset;
use hodgelet::harness::{run, summary_csv, DatasetSpec, ExperimentConfig, Variant};

fn main() -> hodgelet::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "crates/core/tests/data/MUTAG".into()));
    let name = args.next().unwrap_or_else(|| "MUTAG".into());
    let seeds: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let data = load_tudataset(&dir, &name)?;
    println!("{}", serde_json::to_string_pretty(&data.manifest)?);

    let mut config = ExperimentConfig::new(DatasetSpec::Tudataset {
        name,
        path: Some(dir),
    });
    config.variants = vec![Variant::WtGpHodge, Variant::WtGp];
    config.evaluation.num_seeds = seeds;
    let output = run(&config)?;
    for r in &output.records {
        println!("{}", r.csv_row());
    }
    print!("{}", summary_csv(&output.summaries));
    Ok(())
}
