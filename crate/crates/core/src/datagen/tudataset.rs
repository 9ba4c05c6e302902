//! Reader and writer for the TUDataset text layout.
//!
//! A dataset `NAME` is a directory of comma-separated files with 1-indexed
//! global node ids: `NAME_A.txt` (one edge record per line),
//! `NAME_graph_indicator.txt` (graph id per node), `NAME_graph_labels.txt`
//! (label per graph) and optionally `NAME_node_labels.txt`,
//! `NAME_node_attributes.txt` and `NAME_edge_attributes.txt`.
//!
//! Edges are written once, tail before head, in each graph's stored
//! orientation; since node ids keep their relative order, reading the files
//! back reproduces the same orientation and edge signal signs.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::{Dataset, DatasetManifest, DatasetSource};
use crate::error::{Error, Result};
use crate::topology::{LabeledComplex, OrientedComplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Give graphs without node labels or attributes a single constant
    /// vertex feature.
    pub constant_vertex_fallback: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            constant_vertex_fallback: true,
        }
    }
}

struct Table {
    file: String,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path, hasher: &mut Sha256) -> Result<Option<Self>> {
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(path)?;
        hasher.update(path.file_name().unwrap_or_default().as_encoded_bytes());
        hasher.update(text.as_bytes());
        let rows = text
            .lines()
            .map(|l| l.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        // Trailing blank lines are not records.
        let mut rows = rows;
        while rows.last().is_some_and(|r| r.len() == 1 && r[0].is_empty()) {
            rows.pop();
        }
        Ok(Some(Self {
            file: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            rows,
        }))
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Format {
            file: self.file.clone(),
            line: line + 1,
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, line: usize, col: usize) -> Result<T> {
        let cell = self.rows[line]
            .get(col)
            .ok_or_else(|| self.error(line, format!("missing column {}", col + 1)))?;
        cell.parse()
            .map_err(|_| self.error(line, format!("cannot parse `{cell}`")))
    }

    fn floats(&self, line: usize) -> Result<Vec<f64>> {
        (0..self.rows[line].len()).map(|c| self.parse(line, c)).collect()
    }
}

fn file(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

fn required(dir: &Path, name: &str, suffix: &str, hasher: &mut Sha256) -> Result<Table> {
    let path = file(dir, name, suffix);
    Table::read(&path, hasher)?.ok_or(Error::MissingFile(path))
}

pub fn load_tudataset(dir: &Path, name: &str) -> Result<Dataset> {
    load_tudataset_with(dir, name, LoadOptions::default())
}

pub fn load_tudataset_with(dir: &Path, name: &str, options: LoadOptions) -> Result<Dataset> {
    let mut hasher = Sha256::new();
    let adjacency = required(dir, name, "A", &mut hasher)?;
    let indicator = required(dir, name, "graph_indicator", &mut hasher)?;
    let graph_labels = required(dir, name, "graph_labels", &mut hasher)?;
    let node_labels = Table::read(&file(dir, name, "node_labels"), &mut hasher)?;
    let node_attrs = Table::read(&file(dir, name, "node_attributes"), &mut hasher)?;
    let edge_attrs = Table::read(&file(dir, name, "edge_attributes"), &mut hasher)?;

    let num_graphs = graph_labels.rows.len();
    let num_nodes = indicator.rows.len();
    // graph_of[node] (0-based), and the first node of each graph.
    let mut graph_of = Vec::with_capacity(num_nodes);
    let mut first = Vec::with_capacity(num_graphs + 1);
    for line in 0..num_nodes {
        let g: usize = indicator.parse(line, 0)?;
        let expected_new = first.len() + 1;
        if g == expected_new {
            first.push(line);
        } else if g != first.len() || g == 0 {
            return Err(indicator.error(
                line,
                format!("graph id {g} breaks the contiguous range (expected {} or {expected_new})", first.len()),
            ));
        }
        graph_of.push(g - 1);
    }
    if first.len() != num_graphs {
        return Err(indicator.error(
            num_nodes.saturating_sub(1),
            format!("indicator covers {} graphs, labels file lists {num_graphs}", first.len()),
        ));
    }
    first.push(num_nodes);

    for (table, what) in [(&node_labels, "node label"), (&node_attrs, "node attribute")] {
        if let Some(t) = table {
            if t.rows.len() != num_nodes {
                return Err(t.error(t.rows.len().min(num_nodes), format!("expected one {what} row per node ({num_nodes})")));
            }
        }
    }
    if let Some(t) = &edge_attrs {
        if t.rows.len() != adjacency.rows.len() {
            return Err(t.error(t.rows.len().min(adjacency.rows.len()), "expected one edge attribute row per edge record"));
        }
    }

    // Per-graph undirected edges, keyed canonically, keeping the first record.
    let mut edges: Vec<HashMap<(usize, usize), usize>> = vec![HashMap::new(); num_graphs];
    let mut self_loops = 0usize;
    for line in 0..adjacency.rows.len() {
        let u: usize = adjacency.parse(line, 0)?;
        let v: usize = adjacency.parse(line, 1)?;
        if u == 0 || v == 0 || u > num_nodes || v > num_nodes {
            return Err(adjacency.error(line, format!("node id out of range 1..={num_nodes}")));
        }
        let (gu, gv) = (graph_of[u - 1], graph_of[v - 1]);
        if gu != gv {
            return Err(adjacency.error(line, format!("edge joins graphs {} and {}", gu + 1, gv + 1)));
        }
        if u == v {
            self_loops += 1;
            continue;
        }
        let (a, b) = (u - 1 - first[gu], v - 1 - first[gu]);
        edges[gu].entry((a.min(b), a.max(b))).or_insert(line);
    }
    if self_loops > 0 {
        warn!("{name}: ignored {self_loops} self-loop records");
    }

    let label_values: BTreeSet<i64> = match &node_labels {
        Some(t) => (0..num_nodes).map(|i| t.parse(i, 0)).collect::<Result<_>>()?,
        None => BTreeSet::new(),
    };
    let label_index: HashMap<i64, usize> = label_values.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let attr_dims = match &node_attrs {
        Some(t) if num_nodes > 0 => t.rows[0].len(),
        _ => 0,
    };
    let mut dv = label_index.len() + attr_dims;
    let constant = dv == 0 && options.constant_vertex_fallback;
    if constant {
        dv = 1;
    }
    let de = match &edge_attrs {
        Some(t) if !t.rows.is_empty() => t.rows[0].len(),
        _ => 0,
    };

    let class_values: BTreeSet<i64> = (0..num_graphs).map(|g| graph_labels.parse(g, 0)).collect::<Result<_>>()?;
    let class_index: HashMap<i64, usize> = class_values.iter().enumerate().map(|(k, &v)| (v, k)).collect();

    let mut graphs = Vec::with_capacity(num_graphs);
    for g in 0..num_graphs {
        let n = first[g + 1] - first[g];
        let pairs: Vec<(usize, usize)> = edges[g].keys().copied().collect();
        let complex = OrientedComplex::build(n, &pairs)?;
        let mut vf = DMatrix::zeros(dv, n);
        for local in 0..n {
            let node = first[g] + local;
            if constant {
                vf[(0, local)] = 1.0;
                continue;
            }
            if let Some(t) = &node_labels {
                vf[(label_index[&t.parse::<i64>(node, 0)?], local)] = 1.0;
            }
            if let Some(t) = &node_attrs {
                let row = t.floats(node)?;
                if row.len() != attr_dims {
                    return Err(t.error(node, format!("expected {attr_dims} attributes")));
                }
                for (k, x) in row.into_iter().enumerate() {
                    vf[(label_index.len() + k, local)] = x;
                }
            }
        }
        let mut ef = DMatrix::zeros(de, complex.num_edges());
        if let Some(t) = &edge_attrs {
            for (e, &[u, v]) in complex.edges().iter().enumerate() {
                let line = edges[g][&(u, v)];
                let row = t.floats(line)?;
                if row.len() != de {
                    return Err(t.error(line, format!("expected {de} attributes")));
                }
                for (k, x) in row.into_iter().enumerate() {
                    ef[(k, e)] = x;
                }
            }
        }
        let label = class_index[&graph_labels.parse::<i64>(g, 0)?];
        graphs.push(LabeledComplex::new(complex, vf, ef, label)?);
    }
    let hash = hex::encode(hasher.finalize())[..16].to_string();
    let manifest = DatasetManifest::describe(
        name.to_string(),
        DatasetSource::Tudataset,
        serde_json::json!({ "name": name, "directory": dir.display().to_string() }),
        hash,
        &graphs,
    );
    Ok(Dataset { graphs, manifest })
}

/// Writes `graphs` as TUDataset files named `name` in `dir`. Vertex signals
/// go to `node_attributes` and edge signals to `edge_attributes`; labels are
/// written as their class ids.
pub fn write_tudataset(graphs: &[LabeledComplex], dir: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (mut a, mut ind, mut labels, mut nattr, mut eattr) =
        (String::new(), String::new(), String::new(), String::new(), String::new());
    let row = |out: &mut String, values: &mut dyn Iterator<Item = f64>| {
        let cells: Vec<String> = values.map(|x| x.to_string()).collect();
        out.push_str(&cells.join(", "));
        out.push('\n');
    };
    let mut offset = 0usize;
    for (g, graph) in graphs.iter().enumerate() {
        let n = graph.complex.num_vertices();
        for v in 0..n {
            writeln!(ind, "{}", g + 1).expect("write to string");
            if graph.vertex_dims() > 0 {
                row(&mut nattr, &mut graph.vertex_features.column(v).iter().copied());
            }
        }
        for (e, &[t, h]) in graph.complex.edges().iter().enumerate() {
            writeln!(a, "{}, {}", offset + t + 1, offset + h + 1).expect("write to string");
            if graph.edge_dims() > 0 {
                row(&mut eattr, &mut graph.edge_features.column(e).iter().copied());
            }
        }
        writeln!(labels, "{}", graph.label).expect("write to string");
        offset += n;
    }
    fs::write(file(dir, name, "A"), a)?;
    fs::write(file(dir, name, "graph_indicator"), ind)?;
    fs::write(file(dir, name, "graph_labels"), labels)?;
    if graphs.iter().any(|g| g.vertex_dims() > 0) {
        fs::write(file(dir, name, "node_attributes"), nattr)?;
    }
    if graphs.iter().any(|g| g.edge_dims() > 0) {
        fs::write(file(dir, name, "edge_attributes"), eattr)?;
    }
    Ok(())
}
