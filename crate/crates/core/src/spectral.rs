//! Spectra, Bloch bands, closed-form edge energies and edge-state detection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exec::{map_indexed, Execution};
use crate::lattice::{build_chain, Boundary, ChainSpec, Lattice};
use crate::linalg::{asymmetry, eigh, eigvalsh_hermitian, fix_sign, CMatrix};
use crate::{Error, Result};

/// Energy window inside which eigenvalues count as one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` belongs to `energies[k]`.
    pub states: DMatrix<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn state(&self, k: usize) -> DVector<f64> {
        self.states.column(k).into_owned()
    }

    /// Largest ‖Hv - Ev‖ over all pairs.
    pub fn max_residual(&self, h: &DMatrix<f64>) -> f64 {
        (0..self.len())
            .map(|k| {
                let v = self.states.column(k);
                (h * v - v * self.energies[k]).norm()
            })
            .fold(0.0, f64::max)
    }
}

pub fn diagonalize(lat: &Lattice) -> Result<Spectrum> {
    diagonalize_matrix(lat.hamiltonian())
}

/// Full spectrum with a reproducible gauge.
///
/// Every eigenvector has its largest component positive. Inside a degenerate
/// cluster the basis is rotated to diagonalize the site-position operator, so
/// degenerate edge states come out as one left state followed by one right state.
pub fn diagonalize_matrix(h: &DMatrix<f64>) -> Result<Spectrum> {
    if !h.is_square() {
        return Err(Error::Numeric("Hamiltonian is not square".into()));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("Hamiltonian has non-finite entries".into()));
    }
    let scale = h.amax().max(1.0);
    let asym = asymmetry(h);
    if asym > 1e-12 * scale {
        return Err(Error::Numeric(format!("Hamiltonian is not symmetric (defect {asym:.3e})")));
    }
    let (energies, mut states) = eigh(h);
    let n = energies.len();
    let mut widest = 0.0f64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] < DEGENERACY_TOL {
            end += 1;
        }
        if end - start > 1 {
            widest = widest.max(energies[end - 1] - energies[start]);
            localize_cluster(&mut states, start, end);
        }
        start = end;
    }
    let spectrum = Spectrum { energies, states };
    let residual = spectrum.max_residual(h);
    if residual > 1e-9 * scale + widest {
        return Err(Error::Numeric(format!("eigen-decomposition residual {residual:.3e}")));
    }
    Ok(spectrum)
}

fn localize_cluster(states: &mut DMatrix<f64>, start: usize, end: usize) {
    let n = states.nrows();
    let block = states.columns(start, end - start).into_owned();
    let position = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| i as f64));
    let projected = block.transpose() * position * &block;
    let (_, rotation) = eigh(&projected);
    let rotated = block * rotation;
    for (c, col) in rotated.column_iter().enumerate() {
        let mut v: Vec<f64> = col.iter().copied().collect();
        fix_sign(&mut v);
        states.set_column(start + c, &DVector::from_vec(v));
    }
}

/// Bloch matrix of one unit cell of a periodic chain at momentum `k`.
pub fn bloch_matrix(spec: &ChainSpec, k: f64) -> Result<CMatrix> {
    spec.validate()?;
    let m = spec.cell_size();
    let mut h = CMatrix::zeros(m, m);
    for i in 0..m - 1 {
        let b = Complex64::new(spec.pattern_bond(i), 0.0);
        h[(i, i + 1)] += b;
        h[(i + 1, i)] += b;
    }
    let hop = spec.pattern_bond(m - 1);
    h[(m - 1, 0)] += Complex64::from_polar(hop, k);
    h[(0, m - 1)] += Complex64::from_polar(hop, -k);
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub k: f64,
    /// Ascending, one per band.
    pub energies: Vec<f64>,
}

/// `n` momenta evenly spaced over [-π, π).
pub fn k_grid(n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    (0..n).map(|i| -PI + 2.0 * PI * i as f64 / n as f64).collect()
}

pub fn bloch_bands(spec: &ChainSpec, ks: &[f64]) -> Result<Vec<BandPoint>> {
    bloch_bands_with(spec, ks, Execution::default())
}

pub fn bloch_bands_with(spec: &ChainSpec, ks: &[f64], exec: Execution) -> Result<Vec<BandPoint>> {
    if spec.boundary != Boundary::Periodic {
        return Err(Error::Config("Bloch bands need a periodic chain".into()));
    }
    spec.validate()?;
    map_indexed(ks.len(), exec, |i| {
        let h = bloch_matrix(spec, ks[i])?;
        Ok(BandPoint {
            k: ks[i],
            energies: eigvalsh_hermitian(&h),
        })
    })
    .into_iter()
    .collect()
}

/// (min, max) of every bulk band of the periodic version of `spec`.
pub fn bulk_bands(spec: &ChainSpec, n_k: usize) -> Result<Vec<(f64, f64)>> {
    let mut periodic = spec.clone();
    periodic.boundary = Boundary::Periodic;
    periodic.sites = None;
    periodic.termination = Default::default();
    periodic.cells = periodic.cells.max(1);
    let points = bloch_bands(&periodic, &k_grid(n_k.max(2)))?;
    let m = periodic.cell_size();
    Ok((0..m)
        .map(|b| {
            points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.energies[b]), hi.max(p.energies[b]))
            })
        })
        .collect())
}

/// Open intervals between consecutive bands wider than `min_width`.
pub fn band_gaps(bands: &[(f64, f64)], min_width: f64) -> Vec<(f64, f64)> {
    let mut sorted = bands.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gaps = Vec::new();
    let mut top = f64::NEG_INFINITY;
    for (i, (lo, hi)) in sorted.iter().enumerate() {
        if i > 0 && *lo - top > min_width {
            gaps.push((top, *lo));
        }
        top = top.max(*hi);
    }
    gaps
}

/// Nested-radical edge energies of an order-P chain from the scales t^(1) .. t^(P-1).
///
/// Zero modes born at every lower order reappear at ±1 one order up and then
/// unfold as E -> ±√(1 + t E). The result holds 2^(P+1) - 2 values, ascending,
/// duplicates kept.
pub fn edge_energies(scales: &[f64]) -> Result<Vec<f64>> {
    if let Some(t) = scales.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::Domain(format!("scale {t} outside (0, 1]")));
    }
    let p = scales.len() + 1;
    let mut out = Vec::new();
    for nested in 0..p {
        let mut level = vec![1.0, -1.0];
        for &t in &scales[p - 1 - nested..] {
            let mut next = Vec::with_capacity(2 * level.len());
            for e in &level {
                let arg = 1.0 + t * e;
                if arg < 0.0 {
                    return Err(Error::Domain(format!("radical argument 1 + {t} * {e} is negative")));
                }
                next.push(arg.sqrt());
                next.push(-arg.sqrt());
            }
            level = next;
        }
        out.extend(level);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCriteria {
    /// Fraction of sites at each end counted as the tail.
    pub tail_fraction: f64,
    /// Minimum tail weight of an edge state.
    pub threshold: f64,
    /// Bulk band intervals; states inside them are never edge states.
    pub bulk: Option<Vec<(f64, f64)>>,
    pub bulk_tolerance: f64,
}

impl Default for EdgeCriteria {
    fn default() -> Self {
        EdgeCriteria {
            tail_fraction: 0.15,
            threshold: 0.5,
            bulk: None,
            bulk_tolerance: 1e-6,
        }
    }
}

impl EdgeCriteria {
    pub fn with_tail_fraction(mut self, f: f64) -> Self {
        self.tail_fraction = f;
        self
    }

    pub fn with_bulk(mut self, bands: Vec<(f64, f64)>) -> Self {
        self.bulk = Some(bands);
        self
    }

    fn in_bulk(&self, e: f64) -> bool {
        self.bulk.as_ref().is_some_and(|bands| {
            bands
                .iter()
                .any(|(lo, hi)| e >= lo - self.bulk_tolerance && e <= hi + self.bulk_tolerance)
        })
    }

    fn gap_id(&self, e: f64) -> Option<usize> {
        self.bulk
            .as_ref()
            .map(|bands| bands.iter().filter(|(_, hi)| *hi < e).count())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Hybridized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeState {
    pub index: usize,
    pub energy: f64,
    pub left_weight: f64,
    pub right_weight: f64,
    pub side: Side,
    /// Participation number 1 / Σ|ψ_i|⁴, in sites.
    pub localization_length: f64,
    /// Number of bulk bands below the state, when bands are known.
    pub gap: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeStateReport {
    pub states: Vec<EdgeState>,
    pub tail_sites: usize,
}

impl EdgeStateReport {
    pub fn count(&self) -> usize {
        self.states.len()
    }

    pub fn on_side(&self, side: Side) -> impl Iterator<Item = &EdgeState> {
        self.states.iter().filter(move |s| s.side == side)
    }
}

/// Tail weights (left, right) of every eigenstate.
pub fn tail_weights(spectrum: &Spectrum, tail_sites: usize) -> Vec<(f64, f64)> {
    let n = spectrum.states.nrows();
    (0..spectrum.len())
        .map(|k| {
            let v = spectrum.states.column(k);
            let left = (0..tail_sites.min(n)).map(|i| v[i] * v[i]).sum();
            let right = (n.saturating_sub(tail_sites)..n).map(|i| v[i] * v[i]).sum();
            (left, right)
        })
        .collect()
}

pub fn tail_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).ceil() as usize).clamp(1, n.max(1))
}

pub fn detect_edge_states(spectrum: &Spectrum, lat: &Lattice, criteria: &EdgeCriteria) -> EdgeStateReport {
    let tail_sites = tail_size(lat.dim(), criteria.tail_fraction);
    if lat.is_periodic() {
        return EdgeStateReport {
            states: Vec::new(),
            tail_sites,
        };
    }
    let weights = tail_weights(spectrum, tail_sites);
    let states = weights
        .iter()
        .enumerate()
        .filter_map(|(k, &(left, right))| {
            let e = spectrum.energies[k];
            if left + right <= criteria.threshold || criteria.in_bulk(e) {
                return None;
            }
            let side = if left > criteria.threshold {
                Side::Left
            } else if right > criteria.threshold {
                Side::Right
            } else {
                Side::Hybridized
            };
            let v = spectrum.states.column(k);
            let ipr: f64 = v.iter().map(|x| x.powi(4)).sum();
            Some(EdgeState {
                index: k,
                energy: e,
                left_weight: left,
                right_weight: right,
                side,
                localization_length: 1.0 / ipr,
                gap: criteria.gap_id(e),
            })
        })
        .collect();
    EdgeStateReport { states, tail_sites }
}

/// Build an open chain, diagonalize it and flag edge states against its own bulk bands.
pub fn chain_edge_states(spec: &ChainSpec, tail_fraction: f64) -> Result<(Lattice, Spectrum, EdgeStateReport)> {
    let lat = build_chain(spec)?;
    let spectrum = diagonalize(&lat)?;
    let criteria = EdgeCriteria::default()
        .with_tail_fraction(tail_fraction)
        .with_bulk(bulk_bands(spec, 64)?);
    let report = detect_edge_states(&spectrum, &lat, &criteria);
    Ok((lat, spectrum, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn dimer_spectrum() {
        let l = build_chain(&ChainSpec::new(0, vec![FRAC_PI_2], 1).unwrap()).unwrap();
        let s = diagonalize(&l).unwrap();
        assert!((s.energies[0] + 1.0).abs() < 1e-14);
        let r = 0.5f64.sqrt();
        // ground state (|0> - |1>)/√2 up to the largest-positive gauge
        assert!((s.states[(0, 0)].abs() - r).abs() < 1e-14);
        assert!((s.states[(0, 0)] + s.states[(1, 0)]).abs() < 1e-14);
        assert!((s.states[(0, 1)] - r).abs() < 1e-14 && (s.states[(1, 1)] - r).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_input_is_numeric_error() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(diagonalize_matrix(&h), Err(Error::Numeric(_))));
    }

    #[test]
    fn degenerate_pair_splits_left_right() {
        // two decoupled dimers: (0,1) and (2,3)
        let spec = ChainSpec::new(0, vec![FRAC_PI_2], 2).unwrap();
        let s = diagonalize(&build_chain(&spec).unwrap()).unwrap();
        let top = s.state(3);
        let below = s.state(2);
        assert!(below[0].abs() > 0.7 && below[2].abs() < 1e-12);
        assert!(top[2].abs() > 0.7 && top[0].abs() < 1e-12);
    }

    #[test]
    fn bloch_simple_points() {
        let spec = ChainSpec::new(0, vec![FRAC_PI_4], 1).unwrap().periodic();
        let b = bloch_bands(&spec, &[0.0, PI]).unwrap();
        assert!((b[0].energies[1] - 2f64.sqrt()).abs() < 1e-12);
        assert!(b[1].energies[1].abs() < 1e-7);
        assert!(bloch_bands(&spec.clone().open(), &[0.0]).is_err());
    }

    #[test]
    fn edge_energy_set() {
        let t = 0.8 / 2f64.sqrt();
        let e = edge_energies(&[t]).unwrap();
        assert_eq!(e.len(), 6);
        let want = [-(1.0 + t).sqrt(), -1.0, -(1.0 - t).sqrt(), (1.0 - t).sqrt(), 1.0, (1.0 + t).sqrt()];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((e[5] - 1.2513).abs() < 1e-4 && (e[3] - 0.6590).abs() < 1e-4);
        assert_eq!(edge_energies(&[]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(edge_energies(&[0.3, 0.4]).unwrap().len(), 14);
        assert!(matches!(edge_energies(&[1.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn gaps_between_bands() {
        let g = band_gaps(&[(-2.0, -1.0), (-0.5, 0.5), (0.4, 1.0)], 1e-9);
        assert_eq!(g, vec![(-1.0, -0.5)]);
    }

    #[test]
    fn periodic_chain_has_no_edge_states() {
        let spec = ChainSpec::new(1, vec![0.3, 1.2], 10).unwrap().periodic();
        let l = build_chain(&spec).unwrap();
        let s = diagonalize(&l).unwrap();
        assert_eq!(detect_edge_states(&s, &l, &EdgeCriteria::default()).count(), 0);
    }
}
