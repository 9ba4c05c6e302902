//! Oriented graphs augmented with their 3-cliques.
//!
//! Edges are stored tail-to-head with `tail < head` and sorted
//! lexicographically; triangles are stored as ascending vertex triples whose
//! induced cycle `t0 -> t1 -> t2 -> t0` fixes their orientation. `B1` is the
//! vertex-edge incidence matrix (`-1` at the tail, `+1` at the head) and `B2`
//! the edge-triangle incidence matrix, so `B1 * B2 == 0` holds exactly.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OrientedComplex {
    num_vertices: usize,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    b1: DMatrix<i32>,
    b2: DMatrix<i32>,
}

/// Result of relabelling the vertices of a complex.
///
/// `edge_map[e] = (e', s)` says old edge `e` became new edge `e'`, with `s = -1`
/// when its canonical orientation flipped. `triangle_map` is the same for
/// triangles.
#[derive(Debug, Clone)]
pub struct Relabeled {
    pub complex: OrientedComplex,
    pub edge_map: Vec<(usize, i32)>,
    pub triangle_map: Vec<(usize, i32)>,
}

impl OrientedComplex {
    /// Builds the canonical complex of an undirected graph: edges oriented
    /// `tail < head`, duplicates merged, every 3-clique added as a triangle.
    pub fn build(num_vertices: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        Self::build_with(num_vertices, edge_list, true)
    }

    /// Same as [`OrientedComplex::build`] but lets the caller skip the 3-clique
    /// augmentation, leaving `B2` empty.
    pub fn build_with(num_vertices: usize, edge_list: &[(usize, usize)], augment: bool) -> Result<Self> {
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(u, v) in edge_list {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::Structure(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{num_vertices}"
                )));
            }
            if u == v {
                return Err(Error::Structure(format!("self-loop at vertex {u}")));
            }
            edges.push([u.min(v), u.max(v)]);
        }
        edges.sort_unstable();
        edges.dedup();

        let triangles = if augment {
            find_triangles(num_vertices, &edges)
        } else {
            Vec::new()
        };
        Ok(Self::assemble(num_vertices, edges, triangles))
    }

    /// Builds a complex with caller-supplied orientations. Edges may point
    /// either way; triangles are oriented by the order of their vertices.
    /// Every triangle edge must be present.
    pub fn from_oriented(
        num_vertices: usize,
        edges: Vec<[usize; 2]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, &[u, v]) in edges.iter().enumerate() {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::Structure(format!("edge {i} is out of range")));
            }
            if u == v {
                return Err(Error::Structure(format!("self-loop at vertex {u}")));
            }
            if seen.insert((u.min(v), u.max(v)), i).is_some() {
                return Err(Error::Structure(format!("duplicate edge ({u}, {v})")));
            }
        }
        for t in &triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])] {
                if !seen.contains_key(&(a.min(b), a.max(b))) {
                    return Err(Error::Structure(format!(
                        "triangle {t:?} is missing edge ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self::assemble(num_vertices, edges, triangles))
    }

    fn assemble(num_vertices: usize, edges: Vec<[usize; 2]>, triangles: Vec<[usize; 3]>) -> Self {
        let mut b1 = DMatrix::<i32>::zeros(num_vertices, edges.len());
        let mut index = HashMap::with_capacity(edges.len());
        for (e, &[tail, head]) in edges.iter().enumerate() {
            b1[(tail, e)] = -1;
            b1[(head, e)] = 1;
            index.insert((tail.min(head), tail.max(head)), e);
        }
        let mut b2 = DMatrix::<i32>::zeros(edges.len(), triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                let e = index[&(a.min(b), a.max(b))];
                b2[(e, t)] = if edges[e] == [a, b] { 1 } else { -1 };
            }
        }
        Self {
            num_vertices,
            edges,
            triangles,
            b1,
            b2,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn b1(&self) -> &DMatrix<i32> {
        &self.b1
    }

    pub fn b2(&self) -> &DMatrix<i32> {
        &self.b2
    }

    /// Incidence matrices converted to floating point.
    pub fn b1_f64(&self) -> DMatrix<f64> {
        self.b1.map(f64::from)
    }

    pub fn b2_f64(&self) -> DMatrix<f64> {
        self.b2.map(f64::from)
    }

    /// Drops the triangles, keeping vertices and edges.
    pub fn without_triangles(&self) -> Self {
        Self::assemble(self.num_vertices, self.edges.clone(), Vec::new())
    }

    /// Reverses the stored orientation of every edge with `flip[e] == true`.
    pub fn with_flipped_edges(&self, flip: &[bool]) -> Result<Self> {
        if flip.len() != self.edges.len() {
            return Err(Error::contract(format!(
                "flip mask has length {}, complex has {} edges",
                flip.len(),
                self.edges.len()
            )));
        }
        let edges = self
            .edges
            .iter()
            .zip(flip)
            .map(|(&[u, v], &f)| if f { [v, u] } else { [u, v] })
            .collect();
        Ok(Self::assemble(self.num_vertices, edges, self.triangles.clone()))
    }

    /// Renames vertex `v` to `perm[v]` and rebuilds the canonical complex.
    pub fn relabel(&self, perm: &[usize]) -> Result<Relabeled> {
        check_permutation(perm, self.num_vertices)?;
        let mapped: Vec<(usize, usize)> = self.edges.iter().map(|&[u, v]| (perm[u], perm[v])).collect();
        let complex = Self::build_with(self.num_vertices, &mapped, !self.triangles.is_empty())?;
        // Triangles of the relabelled complex are exactly the images of the old
        // ones, provided the old complex carried all 3-cliques.
        let edge_index: HashMap<[usize; 2], usize> =
            complex.edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let edge_map = self
            .edges
            .iter()
            .map(|&[u, v]| {
                let (a, b) = (perm[u], perm[v]);
                let e = edge_index[&[a.min(b), a.max(b)]];
                (e, if a < b { 1 } else { -1 })
            })
            .collect();
        let tri_index: HashMap<[usize; 3], usize> =
            complex.triangles.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut triangle_map = Vec::with_capacity(self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let image = [perm[a], perm[b], perm[c]];
            let mut sorted = image;
            sorted.sort_unstable();
            let t = *tri_index.get(&sorted).ok_or_else(|| {
                Error::Structure("relabelled complex lost a triangle".to_string())
            })?;
            triangle_map.push((t, permutation_parity(&image)));
        }
        Ok(Relabeled {
            complex,
            edge_map,
            triangle_map,
        })
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::contract(format!("permutation has length {}, expected {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::contract("relabelling is not a permutation"));
        }
    }
    Ok(())
}

/// +1 if `t` is an even permutation of its sorted order, -1 otherwise.
fn permutation_parity(t: &[usize; 3]) -> i32 {
    let inversions = (t[0] > t[1]) as i32 + (t[0] > t[2]) as i32 + (t[1] > t[2]) as i32;
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// All 3-cliques of a graph with canonically oriented, sorted, unique edges,
/// found by intersecting sorted forward adjacency lists.
fn find_triangles(num_vertices: usize, edges: &[[usize; 2]]) -> Vec<[usize; 3]> {
    let mut forward: Vec<Vec<usize>> = vec![Vec::new(); num_vertices];
    for &[u, v] in edges {
        forward[u].push(v);
    }
    let mut triangles = Vec::new();
    for &[u, v] in edges {
        let (a, b) = (&forward[u], &forward[v]);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    triangles.push([u, v, a[i]]);
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    triangles.sort_unstable();
    triangles
}

/// Hodge Laplacian of degree `k`: `L0 = B1 B1ᵀ`, `L1 = B1ᵀ B1 + B2 B2ᵀ`.
pub fn hodge_laplacian(complex: &OrientedComplex, k: usize) -> Result<DMatrix<f64>> {
    let b1 = complex.b1_f64();
    match k {
        0 => Ok(&b1 * b1.transpose()),
        1 => {
            let b2 = complex.b2_f64();
            Ok(b1.transpose() * &b1 + &b2 * b2.transpose())
        }
        _ => Err(Error::contract(format!(
            "Hodge Laplacian of degree {k} is not supported (only 0 and 1)"
        ))),
    }
}

/// A complex together with its signals and class label.
///
/// Feature matrices are dimension-major: `vertex_features` is `D_v x N_v`
/// and `edge_features` is `D_e x N_e`. Edge signals are signed relative to
/// the stored edge orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledComplex {
    pub complex: OrientedComplex,
    pub vertex_features: DMatrix<f64>,
    pub edge_features: DMatrix<f64>,
    pub label: usize,
}

impl LabeledComplex {
    pub fn new(
        complex: OrientedComplex,
        vertex_features: DMatrix<f64>,
        edge_features: DMatrix<f64>,
        label: usize,
    ) -> Result<Self> {
        let (dv, nv) = vertex_features.shape();
        let (de, ne) = edge_features.shape();
        if dv == 0 && de == 0 {
            return Err(Error::contract("a labelled complex needs vertex or edge features"));
        }
        if dv > 0 && nv != complex.num_vertices() {
            return Err(Error::contract(format!(
                "vertex features have {nv} columns, complex has {} vertices",
                complex.num_vertices()
            )));
        }
        if de > 0 && ne != complex.num_edges() {
            return Err(Error::contract(format!(
                "edge features have {ne} columns, complex has {} edges",
                complex.num_edges()
            )));
        }
        // Keep empty matrices shaped consistently with the complex.
        let vertex_features = if dv == 0 {
            DMatrix::zeros(0, complex.num_vertices())
        } else {
            vertex_features
        };
        let edge_features = if de == 0 {
            DMatrix::zeros(0, complex.num_edges())
        } else {
            edge_features
        };
        Ok(Self {
            complex,
            vertex_features,
            edge_features,
            label,
        })
    }

    pub fn vertex_dims(&self) -> usize {
        self.vertex_features.nrows()
    }

    pub fn edge_dims(&self) -> usize {
        self.edge_features.nrows()
    }

    /// Relabels vertices, carrying features along (edge signals change sign
    /// where the canonical orientation flips).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let r = self.complex.relabel(perm)?;
        let mut vf = DMatrix::zeros(self.vertex_dims(), self.complex.num_vertices());
        for v in 0..self.complex.num_vertices() {
            vf.set_column(perm[v], &self.vertex_features.column(v));
        }
        let mut ef = DMatrix::zeros(self.edge_dims(), self.complex.num_edges());
        for (e, &(ne, sign)) in r.edge_map.iter().enumerate() {
            ef.set_column(ne, &(self.edge_features.column(e) * f64::from(sign)));
        }
        Self::new(r.complex, vf, ef, self.label)
    }

    /// Reverses the selected edges and negates their signals.
    pub fn flip_edges(&self, flip: &[bool]) -> Result<Self> {
        let complex = self.complex.with_flipped_edges(flip)?;
        let mut ef = self.edge_features.clone();
        for (e, &f) in flip.iter().enumerate() {
            if f {
                ef.column_mut(e).neg_mut();
            }
        }
        Self::new(complex, self.vertex_features.clone(), ef, self.label)
    }
}

/// Line graph: one vertex per input edge, adjacent when the edges share an
/// endpoint. Edge signals become vertex signals verbatim (signed by the stored
/// orientation) and the result carries no edge features.
pub fn line_graph(input: &LabeledComplex) -> Result<LabeledComplex> {
    let complex = &input.complex;
    if complex.num_edges() == 0 {
        return Err(Error::Structure("line graph of a graph without edges".to_string()));
    }
    if input.edge_dims() == 0 {
        return Err(Error::contract("line graph requires edge features"));
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); complex.num_vertices()];
    for (e, &[u, v]) in complex.edges().iter().enumerate() {
        incident[u].push(e);
        incident[v].push(e);
    }
    let mut pairs = Vec::new();
    for star in &incident {
        for (i, &a) in star.iter().enumerate() {
            for &b in &star[i + 1..] {
                pairs.push((a, b));
            }
        }
    }
    let lg = OrientedComplex::build(complex.num_edges(), &pairs)?;
    let empty = DMatrix::zeros(0, lg.num_edges());
    LabeledComplex::new(lg, input.edge_features.clone(), empty, input.label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> OrientedComplex {
        OrientedComplex::build(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn triangle_boundary_matches_hand_expansion() {
        let c = triangle();
        assert_eq!(c.edges(), &[[0, 1], [0, 2], [1, 2]]);
        assert_eq!(c.num_triangles(), 1);
        // ∂(0,1,2) = (0,1) + (1,2) - (0,2)
        let coefficient = |e: [usize; 2]| c.b2()[(c.edges().iter().position(|&x| x == e).unwrap(), 0)];
        assert_eq!(coefficient([0, 1]), 1);
        assert_eq!(coefficient([1, 2]), 1);
        assert_eq!(coefficient([0, 2]), -1);
        assert!((c.b1() * c.b2()).iter().all(|&x| x == 0));
    }

    #[test]
    fn single_edge_incidence() {
        let c = OrientedComplex::build(2, &[(1, 0)]).unwrap();
        assert_eq!(c.b1(), &DMatrix::from_row_slice(2, 1, &[-1, 1]));
        assert_eq!(c.num_triangles(), 0);
        assert_eq!(c.b2().shape(), (1, 0));
        assert_eq!(hodge_laplacian(&c, 1).unwrap(), DMatrix::from_element(1, 1, 2.0));
    }

    #[test]
    fn chordless_cycle_has_no_triangles() {
        let c = OrientedComplex::build(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(c.num_triangles(), 0);
    }

    #[test]
    fn duplicates_merge_and_self_loops_fail() {
        let c = OrientedComplex::build(3, &[(0, 1), (1, 0), (0, 1), (1, 2)]).unwrap();
        assert_eq!(c.num_edges(), 2);
        assert!(matches!(
            OrientedComplex::build(3, &[(0, 1), (2, 2)]),
            Err(Error::Structure(_))
        ));
        assert!(matches!(OrientedComplex::build(2, &[(0, 5)]), Err(Error::Structure(_))));
    }

    #[test]
    fn triangle_laplacians() {
        let c = triangle();
        let l0 = hodge_laplacian(&c, 0).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[2., -1., -1., -1., 2., -1., -1., -1., 2.]);
        assert_eq!(l0, expected);
        let l1 = hodge_laplacian(&c, 1).unwrap();
        // B1ᵀB1 + B2B2ᵀ of a filled triangle is 3·I.
        assert_eq!(l1, DMatrix::identity(3, 3) * 3.0);
        assert!(matches!(hodge_laplacian(&c, 2), Err(Error::Contract(_))));
    }

    #[test]
    fn flipped_orientations_keep_boundary_identity() {
        let c = OrientedComplex::build(4, &[(0, 1), (1, 2), (0, 2), (2, 3), (1, 3)]).unwrap();
        let flipped = c.with_flipped_edges(&[true, false, true, true, false]).unwrap();
        assert!((flipped.b1() * flipped.b2()).iter().all(|&x| x == 0));
        assert_eq!(flipped.b1().column(0), -c.b1().column(0));
        assert_eq!(flipped.b2().row(2), -c.b2().row(2));
    }

    #[test]
    fn line_graph_examples() {
        let path = OrientedComplex::build(3, &[(0, 1), (1, 2)]).unwrap();
        let ef = DMatrix::from_row_slice(1, 2, &[0.5, -2.0]);
        let g = LabeledComplex::new(path, DMatrix::zeros(0, 3), ef, 1).unwrap();
        let lg = line_graph(&g).unwrap();
        assert_eq!(lg.complex.num_vertices(), 2);
        assert_eq!(lg.complex.edges(), &[[0, 1]]);
        assert_eq!(lg.vertex_features, DMatrix::from_row_slice(1, 2, &[0.5, -2.0]));
        assert_eq!(lg.edge_dims(), 0);

        let star = OrientedComplex::build(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let g = LabeledComplex::new(star, DMatrix::zeros(0, 4), DMatrix::from_element(1, 3, 1.0), 0).unwrap();
        let lg = line_graph(&g).unwrap();
        assert_eq!(lg.complex.num_edges(), 3);
        assert_eq!(lg.complex.num_triangles(), 1);

        let tri = triangle();
        let g = LabeledComplex::new(tri, DMatrix::zeros(0, 3), DMatrix::from_element(1, 3, 1.0), 0).unwrap();
        let lg = line_graph(&g).unwrap();
        assert_eq!(lg.complex.num_vertices(), 3);
        assert_eq!(lg.complex.num_edges(), 3);
    }

    #[test]
    fn line_graph_of_edgeless_graph_fails() {
        let c = OrientedComplex::build(2, &[]).unwrap();
        let g = LabeledComplex::new(c, DMatrix::from_element(1, 2, 1.0), DMatrix::zeros(0, 0), 0).unwrap();
        assert!(matches!(line_graph(&g), Err(Error::Structure(_))));
    }
}
