use serde::{Deserialize, Serialize};

use super::{lift_angles, Bond, Lattice, Site, SiteKind, Sublattice};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// How an open chain ends on the right.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Keep repeating the bond pattern up to the last site.
    #[default]
    Straight,
    /// Mirror the bond pattern about the chain center so both ends are identical.
    Mirrored,
}

/// Generative description of a sine-cosine chain of order `order`.
///
/// Bond `i` (between sites `i` and `i + 1`) is `scale * sin θ_j` for even `i` and
/// `scale * cos θ_j` for odd `i`, with `j = (i / 2) mod 2^order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub order: u32,
    pub angles: Vec<f64>,
    pub cells: usize,
    #[serde(default = "unit")]
    pub scale: f64,
    #[serde(default)]
    pub boundary: Boundary,
    /// Explicit site count overriding `2 * 2^order * cells`.
    #[serde(default)]
    pub sites: Option<usize>,
    #[serde(default)]
    pub termination: Termination,
}

fn unit() -> f64 {
    1.0
}

impl ChainSpec {
    pub fn new(order: u32, angles: Vec<f64>, cells: usize) -> Result<Self> {
        let spec = ChainSpec {
            order,
            angles,
            cells,
            scale: 1.0,
            boundary: Boundary::Open,
            sites: None,
            termination: Termination::Straight,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn periodic(mut self) -> Self {
        self.boundary = Boundary::Periodic;
        self
    }

    pub fn open(mut self) -> Self {
        self.boundary = Boundary::Open;
        self
    }

    pub fn with_sites(mut self, sites: usize) -> Self {
        self.sites = Some(sites);
        self
    }

    pub fn mirrored(mut self) -> Self {
        self.termination = Termination::Mirrored;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order > 16 {
            return Err(Error::Config(format!("order {} is unreasonably large", self.order)));
        }
        let want = 1usize << self.order;
        if self.angles.len() != want {
            return Err(Error::Config(format!(
                "order {} needs {} angles, got {}",
                self.order,
                want,
                self.angles.len()
            )));
        }
        if let Some(bad) = self.angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::Config(format!("angle {bad} is not finite")));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("scale must be positive, got {}", self.scale)));
        }
        if self.cells == 0 && self.sites.is_none() {
            return Err(Error::Config("cells must be positive".into()));
        }
        let n = self.site_count();
        if n < 2 {
            return Err(Error::Config(format!("a chain needs at least 2 sites, got {n}")));
        }
        if self.boundary == Boundary::Periodic {
            if n % self.cell_size() != 0 {
                return Err(Error::Config(format!(
                    "periodic chain needs a whole number of {}-site cells, got {n} sites",
                    self.cell_size()
                )));
            }
            if self.termination == Termination::Mirrored {
                return Err(Error::Config("mirrored termination requires open boundary".into()));
            }
        }
        Ok(())
    }

    /// Sites per unit cell, `2 * 2^order`.
    pub fn cell_size(&self) -> usize {
        2usize << self.order
    }

    pub fn site_count(&self) -> usize {
        self.sites.unwrap_or(self.cell_size() * self.cells)
    }

    /// Value of bond `i` in the unterminated pattern.
    pub fn pattern_bond(&self, i: usize) -> f64 {
        let theta = self.angles[(i / 2) % self.angles.len()];
        self.scale * if i % 2 == 0 { theta.sin() } else { theta.cos() }
    }

    /// Value of the bond between sites `i` and `i + 1` after termination.
    pub fn bond(&self, i: usize) -> f64 {
        let n = self.site_count();
        match self.termination {
            Termination::Straight => self.pattern_bond(i),
            Termination::Mirrored => self.pattern_bond(i.min(n - 2 - i)),
        }
    }
}

pub fn build_chain(spec: &ChainSpec) -> Result<Lattice> {
    spec.validate()?;
    let n = spec.site_count();
    let per_cell = spec.cell_size();
    let sites = (0..n)
        .map(|s| Site {
            kind: SiteKind::Chain {
                cell: s / per_cell,
                j: (s % per_cell) / 2 + 1,
            },
            sublattice: Sublattice::alternate(s),
        })
        .collect();
    let mut bonds: Vec<Bond> = (0..n - 1)
        .map(|i| Bond {
            i,
            j: i + 1,
            value: spec.bond(i),
        })
        .collect();
    let periodic = spec.boundary == Boundary::Periodic;
    if periodic {
        bonds.push(Bond {
            i: n - 1,
            j: 0,
            value: spec.pattern_bond(n - 1),
        });
    }
    Ok(Lattice::new(sites, bonds, vec![0.0; n])?.set_periodic(periodic))
}

/// Open sine-cosine chain with an arbitrary number of angles and sites.
pub fn sine_cosine_chain(angles: &[f64], sites: usize, scale: f64) -> Result<Lattice> {
    if angles.is_empty() || sites < 2 {
        return Err(Error::Config("need at least one angle and two sites".into()));
    }
    let per_cell = 2 * angles.len();
    let labels = (0..sites)
        .map(|s| Site {
            kind: SiteKind::Chain {
                cell: s / per_cell,
                j: (s % per_cell) / 2 + 1,
            },
            sublattice: Sublattice::alternate(s),
        })
        .collect();
    let bonds = (0..sites - 1)
        .map(|i| {
            let theta = angles[(i / 2) % angles.len()];
            Bond {
                i,
                j: i + 1,
                value: scale * if i % 2 == 0 { theta.sin() } else { theta.cos() },
            }
        })
        .collect();
    Lattice::new(labels, bonds, vec![0.0; sites])
}

/// Open chain with the given nearest-neighbor hoppings, one site more than hoppings.
pub fn open_chain(hoppings: &[f64]) -> Result<Lattice> {
    let n = hoppings.len() + 1;
    let sites = (0..n)
        .map(|s| Site {
            kind: SiteKind::Chain { cell: s / 2, j: 1 },
            sublattice: Sublattice::alternate(s),
        })
        .collect();
    let bonds = hoppings
        .iter()
        .enumerate()
        .map(|(i, &value)| Bond { i, j: i + 1, value })
        .collect();
    Lattice::new(sites, bonds, vec![0.0; n])
}

/// A chain of successive square roots grown from an order-0 chain.
///
/// Level `p + 1` is obtained from level `p` with [`lift_angles`] and scale
/// `scales[p]`, so its B-sublattice block of H² is `1 + scales[p] * H_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tower {
    levels: Vec<Vec<f64>>,
    scales: Vec<f64>,
    residuals: Vec<f64>,
}

impl Tower {
    pub fn new(base_angle: f64, scales: &[f64]) -> Result<Self> {
        let mut levels = vec![vec![base_angle]];
        let mut residuals = vec![0.0];
        for &t in scales {
            let lifted = lift_angles(levels.last().expect("base level"), t)?;
            residuals.push(lifted.residual);
            levels.push(lifted.angles);
        }
        Ok(Tower {
            levels,
            scales: scales.to_vec(),
            residuals,
        })
    }

    pub fn max_order(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn angles(&self, order: u32) -> &[f64] {
        &self.levels[order as usize]
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn residual(&self, order: u32) -> f64 {
        self.residuals[order as usize]
    }

    pub fn spec(&self, order: u32, cells: usize) -> Result<ChainSpec> {
        ChainSpec::new(order, self.angles(order).to_vec(), cells)
    }

    /// Nested closed-form dispersion at momentum `k`, ascending.
    pub fn dispersion(&self, order: u32, k: f64) -> Result<Vec<f64>> {
        let theta = self.levels[0][0];
        let base = (1.0 + (2.0 * theta).sin() * k.cos()).max(0.0).sqrt();
        let mut energies = vec![-base, base];
        for &t in &self.scales[..order as usize] {
            let mut next = Vec::with_capacity(2 * energies.len());
            for e in &energies {
                let arg = 1.0 + t * e;
                if arg < -1e-12 {
                    return Err(Error::Domain(format!("1 + {t} * {e} is negative")));
                }
                let r = arg.max(0.0).sqrt();
                next.push(-r);
                next.push(r);
            }
            energies = next;
        }
        energies.sort_by(f64::total_cmp);
        Ok(energies)
    }
}
