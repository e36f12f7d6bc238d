use nalgebra::DMatrix;

use super::{Lattice, Sublattice};
use crate::{Error, Result};

/// Diagonal blocks of H² in chiral (A first, then B) order.
#[derive(Clone, Debug, PartialEq)]
pub struct SquaredBlocks {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub a_sites: Vec<usize>,
    pub b_sites: Vec<usize>,
    /// Largest |element| of the A-B cross blocks of the permuted H².
    pub cross: f64,
}

pub fn square_hamiltonian(lat: &Lattice) -> Result<SquaredBlocks> {
    if let Some(why) = lat.bipartite_violation() {
        return Err(Error::Structure(format!("lattice is not bipartite: {why}")));
    }
    let h = lat.hamiltonian();
    let h2 = h * h;
    let (a_sites, b_sites): (Vec<usize>, Vec<usize>) =
        (0..lat.dim()).partition(|&i| lat.sites()[i].sublattice == Sublattice::A);
    let block = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| h2[(rows[r], cols[c])])
    };
    let cross = block(&a_sites, &b_sites).amax();
    Ok(SquaredBlocks {
        a: block(&a_sites, &a_sites),
        b: block(&b_sites, &b_sites),
        a_sites,
        b_sites,
        cross,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedAngles {
    pub angles: Vec<f64>,
    /// Energy scale of the child chain; the recursion is normalized to 1.
    pub scale: f64,
    /// Largest absolute residual of the defining product equations.
    pub residual: f64,
}

/// Square-root angles of a parent sine-cosine chain.
///
/// Finds child angles θ (twice as many as the parent's φ), all in [0, π/2], with
///
/// ```text
/// cos θ_{2k-1} sin θ_{2k}   = t sin φ_k
/// cos θ_{2k}   sin θ_{2k+1} = t cos φ_k      (θ_{2n+1} ≡ θ_1)
/// ```
///
/// so that the unit-scale child chain built by [`super::build_chain`] has
/// B-sublattice block of H² equal to `1 + t H_parent`. The products are the
/// couplings between consecutive B sites through the shared A site. The angles
/// are solved one after another from θ_1; the closing equation fixes θ_1, and
/// the smallest admissible θ_1 is taken.
pub fn lift_angles(parent_angles: &[f64], parent_scale: f64) -> Result<LiftedAngles> {
    if parent_angles.is_empty() {
        return Err(Error::Config("parent has no angles".into()));
    }
    if let Some(a) = parent_angles
        .iter()
        .find(|a| !(-1e-12..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(*a))
    {
        return Err(Error::Config(format!("parent angle {a} outside [0, π/2]")));
    }
    if !(parent_scale > 0.0 && parent_scale.is_finite()) {
        return Err(Error::Config(format!("parent scale must be positive, got {parent_scale}")));
    }
    let targets: Vec<f64> = parent_angles
        .iter()
        .flat_map(|p| [parent_scale * p.sin(), parent_scale * p.cos()])
        .collect();
    if let Some((i, h)) = targets.iter().enumerate().find(|(_, h)| **h > 1.0 + 1e-12) {
        return Err(Error::Infeasible(format!(
            "product {} must equal {h:.6}, but a product of a sine and a cosine cannot exceed 1",
            i + 1
        )));
    }

    const GRID: usize = 4096;
    let closure = |theta1: f64| -> Option<f64> {
        let chain = sweep(theta1, &targets)?;
        Some(chain[chain.len() - 1].cos() * theta1.sin() - targets[targets.len() - 1])
    };
    let step = std::f64::consts::FRAC_PI_2 / GRID as f64;
    let mut prev: Option<(f64, f64)> = None;
    let mut root = None;
    let mut feasible_points = 0usize;
    let mut closest = f64::INFINITY;
    for g in 0..=GRID {
        let x = g as f64 * step;
        let Some(fx) = closure(x) else {
            prev = None;
            continue;
        };
        feasible_points += 1;
        closest = closest.min(fx.abs());
        // tangent roots (e.g. dimerized limits) never change sign
        if fx.abs() <= 1e-14 {
            root = Some(x);
            break;
        }
        if let Some((px, pf)) = prev {
            if pf * fx < 0.0 {
                root = Some(bisect(&closure, px, x, pf));
                break;
            }
        }
        prev = Some((x, fx));
    }
    let Some(theta1) = root else {
        return Err(Error::Infeasible(if feasible_points == 0 {
            "the sequential products cannot all be matched for any θ_1 in [0, π/2]".into()
        } else {
            format!(
                "closing product cos θ_last · sin θ_1 = {:.6} cannot be reached (closest miss {closest:.3e})",
                targets[targets.len() - 1]
            )
        }));
    };
    let angles = sweep(theta1, &targets).ok_or_else(|| {
        Error::Numeric("root of the closing equation left the feasible set".into())
    })?;
    let m = angles.len();
    let residual = (0..m)
        .map(|i| (angles[i].cos() * angles[(i + 1) % m].sin() - targets[i]).abs())
        .fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(Error::Numeric(format!("lifted angles leave residual {residual:.3e}")));
    }
    Ok(LiftedAngles {
        angles,
        scale: 1.0,
        residual,
    })
}

/// θ_{i+1} = asin(h_i / cos θ_i) for i = 1 .. m-1, or None when any step is out of range.
fn sweep(theta1: f64, targets: &[f64]) -> Option<Vec<f64>> {
    let m = targets.len();
    let mut out = Vec::with_capacity(m);
    out.push(theta1);
    for h in &targets[..m - 1] {
        let c = out[out.len() - 1].cos();
        if c <= 0.0 {
            return None;
        }
        let x = h / c;
        if x > 1.0 + 1e-13 || x < -1e-13 {
            return None;
        }
        out.push(x.clamp(0.0, 1.0).asin());
    }
    Some(out)
}

fn bisect(f: &impl Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match f(mid) {
            Some(fm) if fm == 0.0 => return mid,
            Some(fm) if fm * flo < 0.0 => hi = mid,
            Some(fm) => {
                lo = mid;
                flo = fm;
            }
            None => hi = mid,
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, ChainSpec};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn dimer_squares_to_identity() {
        let l = build_chain(&ChainSpec::new(0, vec![FRAC_PI_2], 1).unwrap()).unwrap();
        let sq = square_hamiltonian(&l).unwrap();
        assert_eq!(sq.a, DMatrix::identity(1, 1));
        assert_eq!(sq.b, DMatrix::identity(1, 1));
        assert_eq!(sq.cross, 0.0);
    }

    #[test]
    fn non_bipartite_is_rejected() {
        let l = build_chain(&ChainSpec::new(0, vec![0.3], 2).unwrap())
            .unwrap()
            .with_onsite_offsets(&[0.1, 0.0, 0.0, 0.0])
            .unwrap();
        assert!(matches!(square_hamiltonian(&l), Err(Error::Structure(_))));
    }

    #[test]
    fn unit_parent_gives_dimerized_child() {
        let lifted = lift_angles(&[FRAC_PI_2], 1.0).unwrap();
        assert!(lifted.angles[0].abs() < 1e-12);
        assert!((lifted.angles[1] - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn fig3_lift_satisfies_products() {
        let phi = 0.588f64.asin();
        let t = 0.9 / 2f64.sqrt();
        let l = lift_angles(&[phi], t).unwrap();
        let (a, b) = (l.angles[0], l.angles[1]);
        assert!((a.cos() * b.sin() - t * phi.sin()).abs() < 1e-10);
        assert!((b.cos() * a.sin() - t * phi.cos()).abs() < 1e-10);
        assert!(l.angles.iter().all(|x| (0.0..=FRAC_PI_2).contains(x)));
    }

    #[test]
    fn oversized_scale_is_infeasible() {
        let err = lift_angles(&[std::f64::consts::FRAC_PI_4], 0.99).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }
}
