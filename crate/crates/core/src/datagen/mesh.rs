//! Triangular meshes of the unit square.

use rand::Rng;
use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};

/// Attempts at drawing a non-degenerate random point set.
const MAX_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshKind {
    /// Uniform random points, Delaunay triangulated.
    #[default]
    Random,
    /// `k x k` grid with each cell split along its diagonal, `k = round(√N)`.
    Regular,
}

/// Planar mesh: vertex positions, undirected edges and triangular faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub points: Vec<[f64; 2]>,
    pub edges: Vec<(usize, usize)>,
    pub faces: Vec<[usize; 3]>,
}

/// Delaunay triangulation of `n` uniform points in `[0, 1]²`. Point sets
/// that come out degenerate (coincident points or no face) are redrawn.
pub fn random_mesh<R: Rng>(n: usize, rng: &mut R) -> Result<Mesh> {
    if n < 3 {
        return Err(Error::contract("a triangular mesh needs at least 3 vertices"));
    }
    for _ in 0..=MAX_RETRIES {
        let points: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        if let Some(mesh) = delaunay(&points) {
            return Ok(mesh);
        }
    }
    Err(Error::numerical(
        "mesh generation",
        format!("no non-degenerate point set after {MAX_RETRIES} retries"),
    ))
}

/// Delaunay triangulation of the given points, or `None` when it is
/// degenerate.
pub fn delaunay(points: &[[f64; 2]]) -> Option<Mesh> {
    let mut tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    let mut index = Vec::with_capacity(points.len());
    for p in points {
        index.push(tri.insert(Point2::new(p[0], p[1])).ok()?.index());
    }
    if tri.num_vertices() != points.len() || tri.num_inner_faces() == 0 {
        return None;
    }
    // spade numbers vertices in insertion order; map back defensively.
    let mut back = vec![usize::MAX; points.len()];
    for (i, &h) in index.iter().enumerate() {
        back[h] = i;
    }
    let edges = tri
        .undirected_edges()
        .map(|e| {
            let [a, b] = e.vertices();
            (back[a.fix().index()], back[b.fix().index()])
        })
        .collect();
    let faces = tri
        .inner_faces()
        .map(|f| {
            let [a, b, c] = f.vertices();
            let mut t = [back[a.fix().index()], back[b.fix().index()], back[c.fix().index()]];
            t.sort_unstable();
            t
        })
        .collect();
    Some(Mesh {
        points: points.to_vec(),
        edges,
        faces,
    })
}

/// Regular grid mesh with about `n` vertices.
pub fn regular_mesh(n: usize) -> Result<Mesh> {
    let k = ((n as f64).sqrt().round() as usize).max(2);
    let id = |i: usize, j: usize| i * k + j;
    let step = 1.0 / (k - 1) as f64;
    let points = (0..k * k).map(|v| [(v % k) as f64 * step, (v / k) as f64 * step]).collect();
    let mut edges = Vec::new();
    let mut faces = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if j + 1 < k {
                edges.push((id(i, j), id(i, j + 1)));
            }
            if i + 1 < k {
                edges.push((id(i, j), id(i + 1, j)));
            }
            if i + 1 < k && j + 1 < k {
                edges.push((id(i, j), id(i + 1, j + 1)));
                faces.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            }
        }
    }
    Ok(Mesh { points, edges, faces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_mesh_is_a_planar_triangulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_mesh(60, &mut rng).unwrap();
        assert_eq!(m.points.len(), 60);
        // Euler characteristic of a triangulated disk.
        assert_eq!(60 - m.edges.len() as i64 + m.faces.len() as i64, 1);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<[f64; 2]> = (0..5).map(|i| [i as f64 * 0.2, 0.5]).collect();
        assert!(delaunay(&pts).is_none());
    }

    #[test]
    fn regular_mesh_counts() {
        let m = regular_mesh(16).unwrap();
        assert_eq!(m.points.len(), 16);
        assert_eq!(m.faces.len(), 18);
        assert_eq!(m.edges.len(), 33);
    }
}
