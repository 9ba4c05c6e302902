//! Random graph families with structural class differences.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{config_hash, Dataset, DatasetManifest, DatasetSource};
use crate::error::{Error, Result};
use crate::topology::{LabeledComplex, OrientedComplex};

/// Vertex signal attached to generated graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexFeature {
    /// All ones. Lies entirely in the harmonic vertex subspace.
    Constant,
    /// Vertex degree.
    #[default]
    Degree,
}

fn vertex_signal(complex: &OrientedComplex, kind: VertexFeature) -> DMatrix<f64> {
    let n = complex.num_vertices();
    match kind {
        VertexFeature::Constant => DMatrix::from_element(1, n, 1.0),
        VertexFeature::Degree => {
            let mut deg = DMatrix::zeros(1, n);
            for &[u, v] in complex.edges() {
                deg[(0, u)] += 1.0;
                deg[(0, v)] += 1.0;
            }
            deg
        }
    }
}

fn graph_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingVsCliqueConfig {
    pub num_graphs: usize,
    /// Inclusive vertex-count range.
    pub min_size: usize,
    pub max_size: usize,
    pub clique_size: usize,
    pub vertex_feature: VertexFeature,
    pub seed: u64,
}

impl Default for RingVsCliqueConfig {
    fn default() -> Self {
        Self {
            num_graphs: 200,
            min_size: 10,
            max_size: 30,
            clique_size: 5,
            vertex_feature: VertexFeature::Degree,
            seed: 0,
        }
    }
}

/// Label 0: a cycle. Label 1: a cycle with a clique planted on random
/// vertices. Classes alternate, so they are balanced.
pub fn generate_ring_vs_clique(config: &RingVsCliqueConfig) -> Result<Dataset> {
    if config.min_size < 3 || config.min_size > config.max_size {
        return Err(Error::contract(format!(
            "size range [{}, {}] is degenerate",
            config.min_size, config.max_size
        )));
    }
    if config.clique_size < 3 || config.clique_size > config.min_size {
        return Err(Error::contract(format!(
            "clique size {} must lie in [3, min_size]",
            config.clique_size
        )));
    }
    let graphs = (0..config.num_graphs)
        .into_par_iter()
        .map(|i| {
            let mut rng = graph_rng(config.seed, i);
            let n = rng.random_range(config.min_size..=config.max_size);
            let label = i % 2;
            let mut edges: Vec<(usize, usize)> = (0..n).map(|v| (v, (v + 1) % n)).collect();
            if label == 1 {
                let members = sample(&mut rng, n, config.clique_size).into_vec();
                for (a, &u) in members.iter().enumerate() {
                    for &v in &members[a + 1..] {
                        edges.push((u, v));
                    }
                }
            }
            let complex = OrientedComplex::build(n, &edges)?;
            let vf = vertex_signal(&complex, config.vertex_feature);
            let ne = complex.num_edges();
            LabeledComplex::new(complex, vf, DMatrix::zeros(0, ne), label)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::describe(
        "ring-vs-clique".to_string(),
        DatasetSource::RingVsClique,
        serde_json::to_value(config)?,
        config_hash(config)?,
        &graphs,
    );
    Ok(Dataset { graphs, manifest })
}

/// Connection probabilities of a two-level block model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockProbabilities {
    pub intra: f64,
    pub inter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmConfig {
    pub num_graphs: usize,
    pub num_blocks: usize,
    /// Inclusive per-block size range.
    pub min_block_size: usize,
    pub max_block_size: usize,
    /// Indexed by class label.
    pub classes: [BlockProbabilities; 2],
    pub vertex_feature: VertexFeature,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            num_graphs: 200,
            num_blocks: 2,
            min_block_size: 10,
            max_block_size: 20,
            classes: [
                BlockProbabilities { intra: 0.6, inter: 0.1 },
                BlockProbabilities { intra: 0.35, inter: 0.35 },
            ],
            vertex_feature: VertexFeature::Degree,
            seed: 0,
        }
    }
}

/// Two classes of stochastic block models that differ only in how edges
/// split between and within blocks.
pub fn generate_sbm(config: &SbmConfig) -> Result<Dataset> {
    if config.num_blocks == 0 || config.min_block_size == 0 || config.min_block_size > config.max_block_size {
        return Err(Error::contract("degenerate block specification"));
    }
    let valid = |p: f64| (0.0..=1.0).contains(&p);
    if config.classes.iter().any(|c| !valid(c.intra) || !valid(c.inter)) {
        return Err(Error::contract("block probabilities must lie in [0, 1]"));
    }
    let graphs = (0..config.num_graphs)
        .into_par_iter()
        .map(|i| {
            let mut rng = graph_rng(config.seed, i);
            let label = i % 2;
            let probs = config.classes[label];
            let mut block = Vec::new();
            for b in 0..config.num_blocks {
                let size = rng.random_range(config.min_block_size..=config.max_block_size);
                block.extend(std::iter::repeat_n(b, size));
            }
            let n = block.len();
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    let p = if block[u] == block[v] { probs.intra } else { probs.inter };
                    if rng.random::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
            let complex = OrientedComplex::build(n, &edges)?;
            let vf = vertex_signal(&complex, config.vertex_feature);
            let ne = complex.num_edges();
            LabeledComplex::new(complex, vf, DMatrix::zeros(0, ne), label)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::describe(
        "sbm".to_string(),
        DatasetSource::Sbm,
        serde_json::to_value(config)?,
        config_hash(config)?,
        &graphs,
    );
    Ok(Dataset { graphs, manifest })
}
