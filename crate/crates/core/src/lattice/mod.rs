//! Lattice graphs with dense real symmetric Hamiltonians.

mod chain;
mod junction;
mod memory;
mod squaring;

pub use chain::{build_chain, open_chain, sine_cosine_chain, Boundary, ChainSpec, Termination, Tower};
pub use junction::{build_y_junction, YJunctionSpec};
pub use memory::{build_memory_system, MemorySpec, QubitSpec};
pub use squaring::{lift_angles, square_hamiltonian, LiftedAngles, SquaredBlocks};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

impl Sublattice {
    pub fn chirality(self) -> f64 {
        match self {
            Sublattice::A => 1.0,
            Sublattice::B => -1.0,
        }
    }

    pub fn alternate(index: usize) -> Self {
        if index % 2 == 0 {
            Sublattice::A
        } else {
            Sublattice::B
        }
    }
}

/// Where a site sits in the structure it was built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteKind {
    /// Chain site in cell `cell`, sublattice position `j` (1-based) inside the cell.
    Chain { cell: usize, j: usize },
    Center,
    /// Junction leg site, `pos` counted from 1 at the center.
    Leg { leg: usize, pos: usize },
    Qubit { qubit: usize, slot: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub kind: SiteKind,
    pub sublattice: Sublattice,
}

impl Site {
    pub fn label(&self) -> String {
        let s = match self.sublattice {
            Sublattice::A => 'A',
            Sublattice::B => 'B',
        };
        match &self.kind {
            SiteKind::Chain { cell, j } => format!("m{cell}:{s}{j}"),
            SiteKind::Center => format!("center:{s}"),
            SiteKind::Leg { leg, pos } => format!("leg{leg}:{pos}:{s}"),
            SiteKind::Qubit { qubit, slot } => format!("q{qubit}:{slot}"),
        }
    }
}

/// A structural bond. Its value may be zero; it still exists for disorder purposes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    sites: Vec<Site>,
    bonds: Vec<Bond>,
    onsite: Vec<f64>,
    periodic: bool,
    hamiltonian: DMatrix<f64>,
}

impl Lattice {
    pub fn new(sites: Vec<Site>, bonds: Vec<Bond>, onsite: Vec<f64>) -> Result<Self> {
        let n = sites.len();
        if onsite.len() != n {
            return Err(Error::Config(format!(
                "{} on-site energies for {} sites",
                onsite.len(),
                n
            )));
        }
        for b in &bonds {
            if b.i >= n || b.j >= n {
                return Err(Error::Config(format!(
                    "bond ({}, {}) references a site outside 0..{}",
                    b.i, b.j, n
                )));
            }
            if b.i == b.j {
                return Err(Error::Config(format!("bond ({}, {}) is a loop", b.i, b.j)));
            }
            if !b.value.is_finite() {
                return Err(Error::Numeric(format!("bond ({}, {}) is not finite", b.i, b.j)));
            }
        }
        let hamiltonian = assemble(n, &bonds, &onsite);
        Ok(Lattice {
            sites,
            bonds,
            onsite,
            periodic: false,
            hamiltonian,
        })
    }

    pub(crate) fn set_periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn dim(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.hamiltonian
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn sublattice_mask(&self) -> Vec<Sublattice> {
        self.sites.iter().map(|s| s.sublattice).collect()
    }

    /// Diagonal of Γ: +1 on A, -1 on B.
    pub fn chirality(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.sublattice.chirality()).collect()
    }

    /// Frobenius norm of ΓHΓ + H; zero iff the lattice is chiral.
    pub fn chiral_defect(&self) -> f64 {
        let g = self.chirality();
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                let x = g[i] * self.hamiltonian[(i, j)] * g[j] + self.hamiltonian[(i, j)];
                acc += x * x;
            }
        }
        acc.sqrt()
    }

    /// True when every nonzero matrix element couples A to B.
    pub fn is_bipartite(&self) -> bool {
        self.bipartite_violation().is_none()
    }

    pub(crate) fn bipartite_violation(&self) -> Option<String> {
        let n = self.dim();
        for j in 0..n {
            for i in 0..=j {
                let v = self.hamiltonian[(i, j)];
                if v != 0.0 && self.sites[i].sublattice == self.sites[j].sublattice {
                    return Some(format!(
                        "element ({i}, {j}) = {v} couples {} to {}",
                        self.sites[i].label(),
                        self.sites[j].label()
                    ));
                }
            }
        }
        None
    }

    pub fn with_onsite_offsets(&self, offsets: &[f64]) -> Result<Lattice> {
        if offsets.len() != self.dim() {
            return Err(Error::Config(format!(
                "{} on-site offsets for {} sites",
                offsets.len(),
                self.dim()
            )));
        }
        let onsite = self.onsite.iter().zip(offsets).map(|(a, b)| a + b).collect();
        Ok(self.rebuilt(self.bonds.clone(), onsite))
    }

    pub fn with_bond_offsets(&self, offsets: &[f64]) -> Result<Lattice> {
        if offsets.len() != self.bonds.len() {
            return Err(Error::Config(format!(
                "{} bond offsets for {} bonds",
                offsets.len(),
                self.bonds.len()
            )));
        }
        let bonds = self
            .bonds
            .iter()
            .zip(offsets)
            .map(|(b, d)| Bond {
                value: b.value + d,
                ..*b
            })
            .collect();
        Ok(self.rebuilt(bonds, self.onsite.clone()))
    }

    fn rebuilt(&self, bonds: Vec<Bond>, onsite: Vec<f64>) -> Lattice {
        let hamiltonian = assemble(self.dim(), &bonds, &onsite);
        Lattice {
            sites: self.sites.clone(),
            bonds,
            onsite,
            periodic: self.periodic,
            hamiltonian,
        }
    }

    /// Serializable view: labels, upper-triangle triplets (diagonal included), mask.
    pub fn export(&self) -> LatticeExport {
        let n = self.dim();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = self.hamiltonian[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        LatticeExport {
            sites: self
                .sites
                .iter()
                .enumerate()
                .map(|(index, s)| ExportedSite {
                    index,
                    label: s.label(),
                    sublattice: s.sublattice,
                })
                .collect(),
            triplets,
            sublattice_mask: self.sublattice_mask(),
            periodic: self.periodic,
        }
    }
}

fn assemble(n: usize, bonds: &[Bond], onsite: &[f64]) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n, n);
    for (i, e) in onsite.iter().enumerate() {
        h[(i, i)] = *e;
    }
    for b in bonds {
        h[(b.i, b.j)] += b.value;
        h[(b.j, b.i)] += b.value;
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportedSite {
    pub index: usize,
    pub label: String,
    pub sublattice: Sublattice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeExport {
    pub sites: Vec<ExportedSite>,
    pub triplets: Vec<(usize, usize, f64)>,
    pub sublattice_mask: Vec<Sublattice>,
    pub periodic: bool,
}
