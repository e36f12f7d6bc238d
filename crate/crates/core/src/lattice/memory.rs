use serde::{Deserialize, Serialize};

use super::{build_chain, Bond, ChainSpec, Lattice, Site, SiteKind, Sublattice};
use crate::{Error, Result};

/// A two-site qubit: slot 0 attaches to the chain, slot 1 hangs off slot 0 with hopping `hopping`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    #[serde(default)]
    pub hopping: f64,
    pub coupling: f64,
    pub target_energy: f64,
    /// (chain site, weight); rescaled so that Σ (coupling · w)² = coupling².
    pub attachments: Vec<(usize, f64)>,
}

impl QubitSpec {
    /// Weights normalized to unit sum of squares.
    pub fn normalized_weights(&self) -> Result<Vec<(usize, f64)>> {
        let norm = self.attachments.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Config("qubit attachment weights are all zero".into()));
        }
        Ok(self.attachments.iter().map(|&(s, w)| (s, w / norm)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemorySpec {
    pub chain: ChainSpec,
    pub qubits: Vec<QubitSpec>,
}

impl MemorySpec {
    /// Same system with every qubit coupling replaced by `coupling`.
    pub fn with_coupling(&self, coupling: f64) -> Self {
        let mut out = self.clone();
        out.qubits.iter_mut().for_each(|q| q.coupling = coupling);
        out
    }

    /// Lattice index of `slot` (0 or 1) of qubit `q`.
    pub fn qubit_site(&self, q: usize, slot: usize) -> usize {
        self.chain.site_count() + 2 * q + slot
    }
}

/// Chain sites first, then two sites per qubit.
pub fn build_memory_system(spec: &MemorySpec) -> Result<Lattice> {
    let chain = build_chain(&spec.chain)?;
    let n_chain = chain.dim();
    let mut sites: Vec<Site> = chain.sites().to_vec();
    let mut bonds: Vec<Bond> = chain.bonds().to_vec();
    let mut onsite = chain.onsite().to_vec();
    for (q, qubit) in spec.qubits.iter().enumerate() {
        if let Some((s, _)) = qubit.attachments.iter().find(|(s, _)| *s >= n_chain) {
            return Err(Error::Config(format!(
                "qubit {q} attaches to site {s}, but the chain has {n_chain} sites"
            )));
        }
        let q0 = sites.len();
        for slot in 0..2 {
            sites.push(Site {
                kind: SiteKind::Qubit { qubit: q, slot },
                sublattice: Sublattice::alternate(slot),
            });
            onsite.push(qubit.target_energy);
        }
        bonds.push(Bond {
            i: q0,
            j: q0 + 1,
            value: qubit.hopping,
        });
        for (s, w) in qubit.normalized_weights()? {
            bonds.push(Bond {
                i: s,
                j: q0,
                value: qubit.coupling * w,
            });
        }
    }
    Lattice::new(sites, bonds, onsite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn spec(u: f64) -> MemorySpec {
        MemorySpec {
            chain: ChainSpec::new(1, vec![FRAC_PI_2, 0.0], 5).unwrap().with_sites(21),
            qubits: vec![QubitSpec {
                hopping: 0.0,
                coupling: u,
                target_energy: 1.0,
                attachments: vec![(0, 1.0), (1, 1.0)],
            }],
        }
    }

    #[test]
    fn coupling_row_is_normalized() {
        let l = build_memory_system(&spec(0.05)).unwrap();
        assert_eq!(l.dim(), 23);
        let row: f64 = (0..21).map(|i| l.hamiltonian()[(i, 21)].powi(2)).sum();
        assert!((row - 0.05f64.powi(2)).abs() < 1e-15);
        assert_eq!(l.hamiltonian()[(21, 21)], 1.0);
    }

    #[test]
    fn zero_coupling_decouples() {
        let l = build_memory_system(&spec(0.0)).unwrap();
        for i in 0..21 {
            assert_eq!(l.hamiltonian()[(i, 21)], 0.0);
            assert_eq!(l.hamiltonian()[(i, 22)], 0.0);
        }
    }

    #[test]
    fn bad_attachment_is_config_error() {
        let mut s = spec(0.05);
        s.qubits[0].attachments.push((40, 1.0));
        assert!(matches!(build_memory_system(&s), Err(Error::Config(_))));
    }
}
