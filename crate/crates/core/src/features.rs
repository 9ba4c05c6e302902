//! Hodgelet spectral features: per-dimension, per-filter 2-norms of the
//! wavelet coefficients restricted to each Hodge subspace.
//!
//! Since every block has orthonormal eigenvectors,
//! `‖U w(Λ) Uᵀ x‖ = ‖w(Λ) ∘ Uᵀ x‖`, so a graph only needs its eigenvalues and
//! squared Fourier coefficients per block ([`SpectralSignature`]) to evaluate
//! features for any filter parameters. The eigendecomposition is paid once.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{wavelet_coefficients, Domain, DomainRequest, FilterBank, HodgeSpectrum, Subspace};
use crate::topology::LabeledComplex;

/// Feature terms for a graph population: Hodge-split subspaces, or one full
/// eigenbasis per domain when the decomposition is disabled.
pub fn feature_terms(hodge: bool, has_vertex: bool, has_edge: bool) -> Vec<Subspace> {
    let mut terms = Vec::new();
    if has_vertex {
        if hodge {
            terms.extend([Subspace::VertexCoexact, Subspace::VertexHarmonic]);
        } else {
            terms.push(Subspace::VertexFull);
        }
    }
    if has_edge {
        if hodge {
            terms.extend([Subspace::EdgeExact, Subspace::EdgeCoexact, Subspace::EdgeHarmonic]);
        } else {
            terms.push(Subspace::EdgeFull);
        }
    }
    terms
}

/// One filter bank per feature term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBanks {
    pub entries: Vec<(Subspace, FilterBank)>,
}

impl FilterBanks {
    pub fn new(entries: Vec<(Subspace, FilterBank)>) -> Result<Self> {
        for (term, bank) in &entries {
            if term.domain() != bank.domain {
                return Err(Error::contract(format!(
                    "bank for {} is declared for the {:?} domain",
                    term.short_name(),
                    bank.domain
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Independent default-initialised banks for each term, scaled by the
    /// per-domain population maximum eigenvalue.
    pub fn initialized(
        terms: &[Subspace],
        num_filters: usize,
        num_scales: usize,
        lambda_max: impl Fn(Domain) -> f64,
    ) -> Result<Self> {
        let entries = terms
            .iter()
            .map(|&t| Ok((t, FilterBank::initialized(t.domain(), num_filters, num_scales, lambda_max(t.domain()))?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn terms(&self) -> Vec<Subspace> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn get(&self, term: Subspace) -> Option<&FilterBank> {
        self.entries.iter().find(|e| e.0 == term).map(|e| &e.1)
    }
}

/// Feature vectors of one graph, one per term, laid out dimension-major:
/// entry `d * W + j` is the norm for signal dimension `d` and filter `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HodgeletFeatures {
    pub terms: Vec<(Subspace, Vec<f64>)>,
}

impl HodgeletFeatures {
    /// Feature vector of a term; empty if the term is absent.
    pub fn get(&self, term: Subspace) -> &[f64] {
        self.terms
            .iter()
            .find(|t| t.0 == term)
            .map_or(&[][..], |t| t.1.as_slice())
    }

    pub fn v_c(&self) -> &[f64] {
        self.get(Subspace::VertexCoexact)
    }

    pub fn v_h(&self) -> &[f64] {
        self.get(Subspace::VertexHarmonic)
    }

    pub fn e_e(&self) -> &[f64] {
        self.get(Subspace::EdgeExact)
    }

    pub fn e_c(&self) -> &[f64] {
        self.get(Subspace::EdgeCoexact)
    }

    pub fn e_h(&self) -> &[f64] {
        self.get(Subspace::EdgeHarmonic)
    }

    pub fn layout(&self) -> Vec<(Subspace, usize)> {
        self.terms.iter().map(|(t, v)| (*t, v.len())).collect()
    }

    pub fn max_abs_diff(&self, other: &HodgeletFeatures) -> f64 {
        self.terms
            .iter()
            .zip(&other.terms)
            .flat_map(|(a, b)| a.1.iter().zip(&b.1).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

fn signals_for(graph: &LabeledComplex, domain: Domain) -> Vec<DVector<f64>> {
    let m = match domain {
        Domain::Vertex => &graph.vertex_features,
        Domain::Edge => &graph.edge_features,
    };
    m.row_iter().map(|r| r.transpose()).collect()
}

/// Features computed literally: wavelet coefficients per block, then norms.
pub fn extract_features(
    graph: &LabeledComplex,
    spectrum: &HodgeSpectrum,
    banks: &FilterBanks,
) -> Result<HodgeletFeatures> {
    let mut terms = Vec::with_capacity(banks.entries.len());
    for (term, bank) in &banks.entries {
        let block = spectrum.block(*term);
        let signals = signals_for(graph, term.domain());
        let mut values = Vec::with_capacity(signals.len() * bank.num_filters);
        for x in &signals {
            for j in 0..bank.num_filters {
                values.push(wavelet_coefficients(x, &block, bank, j)?.norm());
            }
        }
        terms.push((*term, values));
    }
    Ok(HodgeletFeatures { terms })
}

/// Eigenvalues and squared Fourier coefficients of one block.
#[derive(Debug, Clone)]
pub struct BlockSignature {
    pub eigenvalues: Vec<f64>,
    /// `coeff_sq[d][i] = (u_iᵀ x_d)²`.
    pub coeff_sq: Vec<Vec<f64>>,
}

/// Everything feature extraction needs from one graph, independent of the
/// filter parameters.
#[derive(Debug, Clone)]
pub struct SpectralSignature {
    pub blocks: Vec<(Subspace, BlockSignature)>,
}

impl SpectralSignature {
    pub fn from_spectrum(graph: &LabeledComplex, spectrum: &HodgeSpectrum, terms: &[Subspace]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(terms.len());
        for &term in terms {
            let block = spectrum.block(term);
            let signals = signals_for(graph, term.domain());
            let mut coeff_sq = Vec::with_capacity(signals.len());
            for x in &signals {
                if x.len() != block.ambient_dim() {
                    return Err(Error::contract(format!(
                        "{} signal has length {}, eigenbasis has {} rows",
                        term.short_name(),
                        x.len(),
                        block.ambient_dim()
                    )));
                }
                coeff_sq.push(block.project(x).iter().map(|c| c * c).collect());
            }
            blocks.push((
                term,
                BlockSignature {
                    eigenvalues: block.eigenvalues.iter().copied().collect(),
                    coeff_sq,
                },
            ));
        }
        Ok(Self { blocks })
    }

    /// Eigendecomposes the graph (only the domains the terms need) and
    /// projects its signals. `augment = false` ignores the triangles.
    pub fn compute(graph: &LabeledComplex, terms: &[Subspace], augment: bool) -> Result<Self> {
        let request = DomainRequest {
            vertex: terms.iter().any(|t| t.domain() == Domain::Vertex),
            edge: terms.iter().any(|t| t.domain() == Domain::Edge),
        };
        let spectrum = if augment {
            HodgeSpectrum::compute_for(&graph.complex, request)?
        } else {
            HodgeSpectrum::compute_for(&graph.complex.without_triangles(), request)?
        };
        Self::from_spectrum(graph, &spectrum, terms)
    }

    /// Largest eigenvalue in a domain across this graph's blocks.
    pub fn max_eigenvalue(&self, domain: Domain) -> f64 {
        self.blocks
            .iter()
            .filter(|(t, _)| t.domain() == domain)
            .flat_map(|(_, b)| b.eigenvalues.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Norms for filter `j` of `bank` on block `block_index`, one per signal
    /// dimension.
    pub fn filter_norms(&self, block_index: usize, bank: &FilterBank, j: usize) -> Vec<f64> {
        let block = &self.blocks[block_index].1;
        let response: Vec<f64> = block.eigenvalues.iter().map(|&l| bank.response(j, l)).collect();
        block
            .coeff_sq
            .iter()
            .map(|c2| {
                c2.iter()
                    .zip(&response)
                    .map(|(c, w)| c * w * w)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// All features for the given banks (which must list the same terms in
    /// the same order as the signature).
    pub fn features(&self, banks: &FilterBanks) -> Result<HodgeletFeatures> {
        if banks.entries.len() != self.blocks.len()
            || banks.entries.iter().zip(&self.blocks).any(|(a, b)| a.0 != b.0)
        {
            return Err(Error::contract("filter banks do not match the signature's terms"));
        }
        let terms = banks
            .entries
            .iter()
            .enumerate()
            .map(|(k, (term, bank))| {
                let dims = self.blocks[k].1.coeff_sq.len();
                let mut values = vec![0.0; dims * bank.num_filters];
                for j in 0..bank.num_filters {
                    for (d, v) in self.filter_norms(k, bank, j).into_iter().enumerate() {
                        values[d * bank.num_filters + j] = v;
                    }
                }
                (*term, values)
            })
            .collect();
        Ok(HodgeletFeatures { terms })
    }
}

/// Signatures for a whole dataset, computed in parallel and aligned with the
/// input order.
pub fn dataset_signatures(dataset: &[LabeledComplex], terms: &[Subspace], augment: bool) -> Result<Vec<SpectralSignature>> {
    dataset
        .par_iter()
        .map(|g| SpectralSignature::compute(g, terms, augment))
        .collect()
}

/// Features for every graph of a dataset. Spectra are computed on demand and
/// do not depend on the bank parameters.
pub fn extract_dataset_features(dataset: &[LabeledComplex], banks: &FilterBanks) -> Result<Vec<HodgeletFeatures>> {
    let terms = banks.terms();
    dataset_signatures(dataset, &terms, true)?
        .par_iter()
        .map(|s| s.features(banks))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::OrientedComplex;
    use nalgebra::DMatrix;

    fn banks(terms: &[Subspace]) -> FilterBanks {
        FilterBanks::initialized(terms, 3, 2, |_| 4.0).unwrap()
    }

    fn house() -> OrientedComplex {
        OrientedComplex::build(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (3, 4)]).unwrap()
    }

    #[test]
    fn constant_vertex_signal_lives_in_harmonic_block() {
        let c = house();
        let g = LabeledComplex::new(c, DMatrix::from_element(1, 5, -2.0), DMatrix::zeros(0, 6), 0).unwrap();
        let terms = feature_terms(true, true, false);
        let b = banks(&terms);
        let f = extract_features(&g, &HodgeSpectrum::compute(&g.complex).unwrap(), &b).unwrap();
        assert!(f.v_c().iter().all(|&x| x.abs() < 1e-12));
        let bank = b.get(Subspace::VertexHarmonic).unwrap();
        for j in 0..3 {
            let expected = 2.0 * 5f64.sqrt() * bank.response(j, 0.0).abs();
            assert!((f.v_h()[j] - expected).abs() < 1e-12);
        }
        assert!(f.e_e().is_empty() && f.e_c().is_empty() && f.e_h().is_empty());
    }

    #[test]
    fn zero_signal_gives_zero_features() {
        let c = house();
        let g = LabeledComplex::new(c, DMatrix::zeros(2, 5), DMatrix::zeros(1, 6), 1).unwrap();
        let terms = feature_terms(true, true, true);
        let f = extract_features(&g, &HodgeSpectrum::compute(&g.complex).unwrap(), &banks(&terms)).unwrap();
        assert!(f.terms.iter().all(|(_, v)| v.iter().all(|&x| x == 0.0)));
        assert_eq!(f.v_c().len(), 6);
        assert_eq!(f.e_h().len(), 3);
    }

    #[test]
    fn signature_route_matches_literal_route() {
        let c = house();
        let vf = DMatrix::from_row_slice(2, 5, &[1.0, -0.5, 2.0, 0.3, 0.0, 0.2, 0.2, -1.0, 4.0, 1.5]);
        let ef = DMatrix::from_row_slice(1, 6, &[0.4, -1.2, 0.8, 0.1, -0.6, 2.2]);
        let g = LabeledComplex::new(c, vf, ef, 0).unwrap();
        for hodge in [true, false] {
            let terms = feature_terms(hodge, true, true);
            let b = banks(&terms);
            let spectrum = HodgeSpectrum::compute(&g.complex).unwrap();
            let literal = extract_features(&g, &spectrum, &b).unwrap();
            let fast = SpectralSignature::from_spectrum(&g, &spectrum, &terms)
                .unwrap()
                .features(&b)
                .unwrap();
            assert!(literal.max_abs_diff(&fast) < 1e-12);
        }
    }

    #[test]
    fn dataset_extraction_is_ordered_and_deterministic() {
        assert!(extract_dataset_features(&[], &banks(&[Subspace::VertexFull])).unwrap().is_empty());
        let c = house();
        let g = LabeledComplex::new(c, DMatrix::from_fn(1, 5, |_, j| j as f64), DMatrix::zeros(0, 6), 0).unwrap();
        let b = banks(&feature_terms(true, true, false));
        let fs = extract_dataset_features(&[g.clone(), g], &b).unwrap();
        assert_eq!(fs[0], fs[1]);
    }
}
