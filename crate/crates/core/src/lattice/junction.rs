use serde::{Deserialize, Serialize};

use super::{Bond, Lattice, Site, SiteKind, Sublattice};
use crate::{Error, Result};

/// Three legs joined at one A-sublattice center site.
///
/// Each leg lists its bond values from the center outward, so a leg with `k`
/// bonds adds `k` sites. Leg sites alternate B, A, B, ... starting next to the center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YJunctionSpec {
    pub legs: [Vec<f64>; 3],
    pub defect_legs: [usize; 2],
}

impl YJunctionSpec {
    /// Leg of three sites: center bond, inner `cos α`, outer `sin α`.
    pub fn leg(center: f64, alpha: f64) -> Vec<f64> {
        vec![center, alpha.cos(), alpha.sin()]
    }

    /// A leg holding a three-site defect: detached from the center, outer dimer closed.
    pub fn defect_leg() -> Vec<f64> {
        vec![0.0, 0.0, 1.0]
    }

    /// A leg attached to the center with leg angle `π/2 - λ`.
    pub fn connected_leg(lambda: f64) -> Vec<f64> {
        Self::leg(1.0, std::f64::consts::FRAC_PI_2 - lambda)
    }

    /// Starting configuration of the braid: defects on legs 0 and 1, leg 2 connected.
    pub fn braid_start(lambda: f64) -> Self {
        YJunctionSpec {
            legs: [Self::defect_leg(), Self::defect_leg(), Self::connected_leg(lambda)],
            defect_legs: [0, 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.legs.iter().position(|l| l.is_empty()) {
            return Err(Error::Structure(format!("leg {l} has no sites")));
        }
        let [a, b] = self.defect_legs;
        if a > 2 || b > 2 || a == b {
            return Err(Error::Config(format!(
                "defect legs must be two distinct legs in 0..3, got [{a}, {b}]"
            )));
        }
        Ok(())
    }

    /// Site index of position `pos` (1-based from the center) on `leg`.
    pub fn site(&self, leg: usize, pos: usize) -> usize {
        1 + self.legs[..leg].iter().map(Vec::len).sum::<usize>() + pos - 1
    }

    /// The leg carrying neither defect.
    pub fn free_leg(&self) -> usize {
        3 - self.defect_legs[0] - self.defect_legs[1]
    }
}

pub fn build_y_junction(spec: &YJunctionSpec) -> Result<Lattice> {
    spec.validate()?;
    let mut sites = vec![Site {
        kind: SiteKind::Center,
        sublattice: Sublattice::A,
    }];
    let mut bonds = Vec::new();
    for (leg, values) in spec.legs.iter().enumerate() {
        let mut prev = 0usize;
        for (k, &value) in values.iter().enumerate() {
            let pos = k + 1;
            let idx = sites.len();
            sites.push(Site {
                kind: SiteKind::Leg { leg, pos },
                sublattice: if pos % 2 == 1 { Sublattice::B } else { Sublattice::A },
            });
            bonds.push(Bond {
                i: prev,
                j: idx,
                value,
            });
            prev = idx;
        }
    }
    let n = sites.len();
    Lattice::new(sites, bonds, vec![0.0; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigvalsh;

    #[test]
    fn one_dimer_legs_make_a_seven_site_star() {
        let spec = YJunctionSpec {
            legs: [vec![1.0, 0.5], vec![0.8, 0.3], vec![0.6, 0.9]],
            defect_legs: [0, 1],
        };
        let l = build_y_junction(&spec).unwrap();
        assert_eq!(l.dim(), 7);
        assert_eq!(l.chiral_defect(), 0.0);
        let e = eigvalsh(l.hamiltonian());
        for k in 0..7 {
            assert!((e[k] + e[6 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn site_indexing_follows_leg_order() {
        let spec = YJunctionSpec::braid_start(1.0);
        assert_eq!(spec.site(0, 1), 1);
        assert_eq!(spec.site(1, 3), 6);
        assert_eq!(spec.site(2, 2), 8);
        assert_eq!(spec.free_leg(), 2);
    }

    #[test]
    fn defect_legs_must_differ() {
        let mut spec = YJunctionSpec::braid_start(1.0);
        spec.defect_legs = [1, 1];
        assert!(build_y_junction(&spec).is_err());
        spec.defect_legs = [0, 1];
        spec.legs[2].clear();
        assert!(matches!(build_y_junction(&spec), Err(Error::Structure(_))));
    }
}
