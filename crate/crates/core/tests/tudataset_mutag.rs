use std::path::Path;

use hodgelet::datagen::{load_tudataset, DatasetSource};

fn mutag_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/MUTAG"))
}

#[test]
fn mutag_shape() {
    let d = load_tudataset(mutag_dir(), "MUTAG").unwrap();
    let m = &d.manifest;
    assert_eq!(m.source, DatasetSource::Tudataset);
    assert_eq!(m.num_graphs, 188);
    assert_eq!(m.class_counts, vec![63, 125]);
    assert_eq!(m.vertex_dims, 7);
    assert_eq!(m.edge_dims, 0);
    for g in &d.graphs {
        for col in g.vertex_features.column_iter() {
            assert_eq!(col.sum(), 1.0);
            assert!(col.iter().all(|&x| x == 0.0 || x == 1.0));
        }
    }
    let edges: usize = d.graphs.iter().map(|g| g.complex.num_edges()).sum();
    // The archive lists every bond in both directions.
    assert_eq!(edges, 7442 / 2);
}
