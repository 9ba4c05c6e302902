//! Mixtures of divergence-free and curl-free fields, discretised on the
//! edges of a triangular mesh.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::{random_mesh, regular_mesh, Mesh, MeshKind};
use super::rff::RffField;
use super::{config_hash, Dataset, DatasetManifest, DatasetSource};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, Rule};
use crate::topology::{LabeledComplex, OrientedComplex};

/// How a field is reduced to one number per oriented edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeProjection {
    /// `∫_e X · dr`, the de Rham map.
    #[default]
    LineIntegral,
    /// The line integral divided by the edge length (mean tangential
    /// component).
    UnitTangent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorFieldConfig {
    pub mesh_vertices: usize,
    pub num_graphs: usize,
    pub mix_low: f64,
    pub mix_high: f64,
    /// Standard deviation `R` of the per-edge Gaussian noise.
    pub noise_level: f64,
    pub rff_features: usize,
    pub gp_lengthscale: f64,
    pub quadrature_points: usize,
    pub mesh: MeshKind,
    pub projection: EdgeProjection,
    pub seed: u64,
}

impl Default for VectorFieldConfig {
    fn default() -> Self {
        Self {
            mesh_vertices: 100,
            num_graphs: 100,
            mix_low: 0.1,
            mix_high: 0.9,
            noise_level: 0.0,
            rff_features: 256,
            gp_lengthscale: 0.3,
            quadrature_points: 10,
            mesh: MeshKind::Random,
            projection: EdgeProjection::LineIntegral,
            seed: 0,
        }
    }
}

impl VectorFieldConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |path: &str, message: String| {
            Err(Error::Config {
                path: path.to_string(),
                message,
            })
        };
        if !(self.mix_low < 0.5 && 0.5 < self.mix_high && self.mix_low >= 0.0 && self.mix_high <= 1.0) {
            return fail(
                "mix_low/mix_high",
                format!("need 0 <= mix_low < 0.5 < mix_high <= 1, got {} and {}", self.mix_low, self.mix_high),
            );
        }
        if self.mesh_vertices < 4 {
            return fail("mesh_vertices", format!("need at least 4, got {}", self.mesh_vertices));
        }
        if self.rff_features == 0 {
            return fail("rff_features", "need at least 1".to_string());
        }
        if self.num_graphs == 0 {
            return fail("num_graphs", "need at least 1".to_string());
        }
        if self.quadrature_points == 0 {
            return fail("quadrature_points", "need at least 1".to_string());
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return fail("noise_level", format!("must be non-negative, got {}", self.noise_level));
        }
        if !(self.gp_lengthscale > 0.0) {
            return fail("gp_lengthscale", "must be positive".to_string());
        }
        Ok(())
    }

    /// Mixing-weight interval for a class. Near-ambiguous weights around 0.5
    /// are excluded so labels are never a coin flip.
    pub fn mix_range(&self, label: usize) -> (f64, f64) {
        if label == 0 {
            (self.mix_low, 0.45f64.max(self.mix_low + (0.5 - self.mix_low) / 2.0))
        } else {
            (0.55f64.min(self.mix_high - (self.mix_high - 0.5) / 2.0), self.mix_high)
        }
    }
}

/// Projects `field` onto every stored edge of `complex`, whose vertices sit
/// at `points`.
pub fn project_edges(
    complex: &OrientedComplex,
    points: &[[f64; 2]],
    field: impl Fn([f64; 2]) -> [f64; 2],
    rule: &Rule,
    projection: EdgeProjection,
) -> Vec<f64> {
    complex
        .edges()
        .iter()
        .map(|&[tail, head]| {
            let (p, q) = (points[tail], points[head]);
            let d = [q[0] - p[0], q[1] - p[1]];
            let integral: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&x, &w)| {
                    let t = 0.5 * (x + 1.0);
                    let v = field([p[0] + t * d[0], p[1] + t * d[1]]);
                    0.5 * w * (v[0] * d[0] + v[1] * d[1])
                })
                .sum();
            match projection {
                EdgeProjection::LineIntegral => integral,
                EdgeProjection::UnitTangent => integral / d[0].hypot(d[1]),
            }
        })
        .collect()
}

/// Mesh graph with every 3-clique filled.
pub fn mesh_complex(mesh: &Mesh) -> Result<OrientedComplex> {
    OrientedComplex::build(mesh.points.len(), &mesh.edges)
}

/// One generated sample with the quantities behind it.
#[derive(Debug, Clone)]
pub struct VectorFieldSample {
    pub graph: LabeledComplex,
    pub mixing: f64,
    pub points: Vec<[f64; 2]>,
}

/// Graph `index` of the dataset. Every graph has its own RNG stream, so the
/// result does not depend on which other graphs are generated.
pub fn generate_sample(config: &VectorFieldConfig, index: usize) -> Result<VectorFieldSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let label = index % 2;
    let (lo, hi) = config.mix_range(label);
    let mixing = rng.random_range(lo..=hi);
    let mesh = match config.mesh {
        MeshKind::Random => random_mesh(config.mesh_vertices, &mut rng)?,
        MeshKind::Regular => regular_mesh(config.mesh_vertices)?,
    };
    let rotational = RffField::sample(config.rff_features, config.gp_lengthscale, &mut rng)?;
    let potential = RffField::sample(config.rff_features, config.gp_lengthscale, &mut rng)?;
    let complex = mesh_complex(&mesh)?;
    let rule = gauss_legendre(config.quadrature_points);
    let mut values = project_edges(
        &complex,
        &mesh.points,
        |p| {
            let a = rotational.rotated_gradient(p);
            let b = potential.gradient(p);
            [mixing * a[0] + (1.0 - mixing) * b[0], mixing * a[1] + (1.0 - mixing) * b[1]]
        },
        &rule,
        config.projection,
    );
    if config.noise_level > 0.0 {
        let noise = Normal::new(0.0, config.noise_level).expect("finite noise level");
        values.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }
    let n = mesh.points.len();
    let ne = complex.num_edges();
    let graph = LabeledComplex::new(complex, DMatrix::zeros(0, n), DMatrix::from_row_slice(1, ne, &values), label)?;
    Ok(VectorFieldSample {
        graph,
        mixing,
        points: mesh.points,
    })
}

/// Balanced dataset of mostly-curl-free (label 0) and mostly-divergence-free
/// (label 1) fields.
pub fn generate_vector_field_dataset(config: &VectorFieldConfig) -> Result<Dataset> {
    config.validate()?;
    let graphs = (0..config.num_graphs)
        .into_par_iter()
        .map(|i| generate_sample(config, i).map(|s| s.graph))
        .collect::<Result<Vec<_>>>()?;
    let hash = config_hash(config)?;
    let manifest = DatasetManifest::describe(
        format!("vector-field-n{}", config.mesh_vertices),
        DatasetSource::VectorField,
        serde_json::to_value(config)?,
        hash,
        &graphs,
    );
    Ok(Dataset { graphs, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{HodgeSpectrum, Subspace};
    use nalgebra::DVector;

    fn small() -> VectorFieldConfig {
        VectorFieldConfig {
            mesh_vertices: 30,
            num_graphs: 6,
            ..VectorFieldConfig::default()
        }
    }

    #[test]
    fn constant_field_gives_x_extent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mesh = random_mesh(25, &mut rng).unwrap();
        let c = mesh_complex(&mesh).unwrap();
        let v = project_edges(&c, &mesh.points, |_| [1.0, 0.0], &gauss_legendre(10), EdgeProjection::LineIntegral);
        for (e, &[t, h]) in c.edges().iter().enumerate() {
            assert!((v[e] - (mesh.points[h][0] - mesh.points[t][0])).abs() < 1e-10);
        }
    }

    #[test]
    fn reversing_an_edge_flips_its_value() {
        let pts = [[0.1, 0.2], [0.7, 0.4], [0.3, 0.9]];
        let f = RffField::sample(64, 0.3, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let rule = gauss_legendre(10);
        let fwd = OrientedComplex::from_oriented(3, vec![[0, 1]], vec![]).unwrap();
        let bwd = OrientedComplex::from_oriented(3, vec![[1, 0]], vec![]).unwrap();
        let a = project_edges(&fwd, &pts, |p| f.gradient(p), &rule, EdgeProjection::LineIntegral)[0];
        let b = project_edges(&bwd, &pts, |p| f.gradient(p), &rule, EdgeProjection::LineIntegral)[0];
        assert!((a + b).abs() < 1e-12);
        // A gradient field integrates to the potential difference.
        assert!((a - (f.value(pts[1]) - f.value(pts[0]))).abs() < 1e-9);
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mesh = random_mesh(100, &mut rng).unwrap();
        let c = mesh_complex(&mesh).unwrap();
        let f = RffField::sample(256, 0.3, &mut rng).unwrap();
        let field = |p| f.rotated_gradient(p);
        let coarse = project_edges(&c, &mesh.points, field, &gauss_legendre(10), EdgeProjection::LineIntegral);
        let fine = project_edges(&c, &mesh.points, field, &gauss_legendre(50), EdgeProjection::LineIntegral);
        let worst = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn pure_gradient_field_is_mostly_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mesh = random_mesh(100, &mut rng).unwrap();
        let c = mesh_complex(&mesh).unwrap();
        let f = RffField::sample(256, 0.3, &mut rng).unwrap();
        let x = DVector::from_vec(project_edges(
            &c,
            &mesh.points,
            |p| f.gradient(p),
            &gauss_legendre(10),
            EdgeProjection::LineIntegral,
        ));
        let s = HodgeSpectrum::compute(&c).unwrap();
        let energy = |t| s.block(t).project(&x).norm_squared();
        let rest = energy(Subspace::EdgeCoexact) + energy(Subspace::EdgeHarmonic);
        assert!(rest / x.norm_squared() <= 0.05);
    }

    #[test]
    fn generation_is_deterministic_and_balanced() {
        let a = generate_vector_field_dataset(&small()).unwrap();
        let b = generate_vector_field_dataset(&small()).unwrap();
        assert_eq!(a.graphs, b.graphs);
        assert_eq!(a.manifest.class_counts, vec![3, 3]);
        assert_eq!((a.manifest.vertex_dims, a.manifest.edge_dims), (0, 1));
        for i in 0..6 {
            let s = generate_sample(&small(), i).unwrap();
            assert_eq!(s.graph, a.graphs[i]);
            assert_eq!(s.mixing > 0.5, s.graph.label == 1);
        }
    }

    #[test]
    fn invalid_mixing_bounds_are_rejected() {
        let bad = VectorFieldConfig {
            mix_low: 0.5,
            ..VectorFieldConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { .. })));
    }
}
