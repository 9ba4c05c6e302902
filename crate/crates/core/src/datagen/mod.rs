//! Dataset ingestion and generation.
//!
//! Every dataset carries a [`DatasetManifest`] recording where it came from
//! and a hash of the configuration (or source files) that produced it.
//! Datasets persist as TUDataset text files plus `manifest.json`.

pub mod mesh;
pub mod rff;
pub mod synthetic;
pub mod tudataset;
pub mod vector_field;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::topology::{line_graph, LabeledComplex};

pub use synthetic::{generate_ring_vs_clique, generate_sbm, RingVsCliqueConfig, SbmConfig, VertexFeature};
pub use tudataset::{load_tudataset, write_tudataset};
pub use vector_field::{generate_vector_field_dataset, VectorFieldConfig};

/// File name of the manifest inside a persisted dataset directory.
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetSource {
    Tudataset,
    RingVsClique,
    Sbm,
    VectorField,
    LineGraphOf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub source: DatasetSource,
    /// Generator configuration, or the source location for ingested data.
    pub config: serde_json::Value,
    pub config_hash: String,
    /// Hash of the dataset this one was derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_hash: Option<String>,
    pub num_graphs: usize,
    pub class_counts: Vec<usize>,
    pub vertex_dims: usize,
    pub edge_dims: usize,
}

impl DatasetManifest {
    pub fn describe(
        name: String,
        source: DatasetSource,
        config: serde_json::Value,
        config_hash: String,
        graphs: &[LabeledComplex],
    ) -> Self {
        let classes = graphs.iter().map(|g| g.label + 1).max().unwrap_or(0);
        let mut class_counts = vec![0; classes];
        for g in graphs {
            class_counts[g.label] += 1;
        }
        let first = graphs.first();
        Self {
            name,
            source,
            config,
            config_hash,
            parent_hash: None,
            num_graphs: graphs.len(),
            class_counts,
            vertex_dims: first.map_or(0, |g| g.vertex_dims()),
            edge_dims: first.map_or(0, |g| g.edge_dims()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graphs: Vec<LabeledComplex>,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.label).collect()
    }
}

/// First 16 hex digits of the SHA-256 of a value's JSON encoding.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_string(config)?;
    Ok(hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string())
}

/// Replaces every graph by its line graph, moving edge signals to vertices.
pub fn apply_line_graph(dataset: &Dataset) -> Result<Dataset> {
    let graphs = dataset
        .graphs
        .par_iter()
        .map(line_graph)
        .collect::<Result<Vec<_>>>()?;
    let parent = dataset.manifest.config_hash.clone();
    let mut manifest = DatasetManifest::describe(
        format!("{}-line-graph", dataset.manifest.name),
        DatasetSource::LineGraphOf,
        serde_json::json!({ "parent": dataset.manifest.name }),
        config_hash(&("line-graph-of", &parent))?,
        &graphs,
    );
    manifest.parent_hash = Some(parent);
    Ok(Dataset { graphs, manifest })
}

/// Writes the graphs in TUDataset layout and the manifest next to them.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    write_tudataset(&dataset.graphs, dir, &dataset.manifest.name)?;
    std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&dataset.manifest)? + "\n")?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Reads a directory written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_manifest(dir)?;
    let options = tudataset::LoadOptions {
        constant_vertex_fallback: manifest.vertex_dims > 0,
    };
    let loaded = tudataset::load_tudataset_with(dir, &manifest.name, options)?;
    Ok(Dataset {
        graphs: loaded.graphs,
        manifest,
    })
}
