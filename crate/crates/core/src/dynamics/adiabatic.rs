use nalgebra::DMatrix;

use num_complex::Complex64;

use super::{Drive, StateVector};
use crate::linalg::{eigh, eigvalsh};
use crate::{Error, Result};

/// Gap below which two instantaneous levels count as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    /// D_ij = ⟨ε_i| d/dt |ε_j⟩ in the instantaneous eigenbasis at t.
    pub d: DMatrix<f64>,
    pub energies: Vec<f64>,
    /// Set when two levels at t are closer than [`DEGENERATE_GAP`]; the gauge is then ambiguous.
    pub warning: Option<String>,
}

impl Coupling {
    /// ‖D + Dᵀ‖ / ‖D‖ (0 for D = 0).
    pub fn symmetric_fraction(&self) -> f64 {
        let norm = self.d.norm();
        if norm == 0.0 {
            0.0
        } else {
            (&self.d + self.d.transpose()).norm() / norm
        }
    }

    /// max over i ≠ j of |D_ij| / |E_i - E_j|, skipping degenerate pairs.
    pub fn adiabaticity(&self) -> f64 {
        let n = self.energies.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let gap = (self.energies[i] - self.energies[j]).abs();
                if i != j && gap > DEGENERATE_GAP {
                    worst = worst.max(self.d[(i, j)].abs() / gap);
                }
            }
        }
        worst
    }
}

/// Nonadiabatic coupling matrix by central differences of sign-aligned eigenvectors.
pub fn nonadiabatic_coupling<D: Drive + ?Sized>(drive: &D, t: f64, dt: f64) -> Result<Coupling> {
    let (e0, v0) = eigh(&drive.hamiltonian(t)?);
    let (_, mut vp) = eigh(&drive.hamiltonian(t + dt)?);
    let (_, mut vm) = eigh(&drive.hamiltonian(t - dt)?);
    align(&v0, &mut vp);
    align(&v0, &mut vm);
    let d = v0.transpose() * (vp - vm) / (2.0 * dt);
    let warning = e0
        .windows(2)
        .position(|w| w[1] - w[0] < DEGENERATE_GAP)
        .map(|k| format!("levels {k} and {} are degenerate at t = {t}; gauge is ambiguous", k + 1));
    Ok(Coupling {
        d,
        energies: e0,
        warning,
    })
}

fn align(reference: &DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..v.ncols() {
        if reference.column(j).dot(&v.column(j)) < 0.0 {
            v.column_mut(j).neg_mut();
        }
    }
}

/// Instantaneous spectra at `samples + 1` evenly spaced times over the schedule.
pub fn level_history<D: Drive + ?Sized>(drive: &D, samples: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let duration = drive.schedule().duration();
    let samples = samples.max(1);
    (0..=samples)
        .map(|i| {
            let t = duration * i as f64 / samples as f64;
            Ok((t, eigvalsh(&drive.hamiltonian(t)?)))
        })
        .collect()
}

/// Minimum over time of each adjacent instantaneous gap E_{k+1} - E_k.
pub fn min_gap<D: Drive + ?Sized>(drive: &D, samples: usize) -> Result<Vec<f64>> {
    let history = level_history(drive, samples)?;
    let n = history[0].1.len();
    let mut gaps = vec![f64::INFINITY; n.saturating_sub(1)];
    for (_, e) in &history {
        for (g, w) in gaps.iter_mut().zip(e.windows(2)) {
            *g = g.min(w[1] - w[0]);
        }
    }
    Ok(gaps)
}

/// Largest [`Coupling::adiabaticity`] over `samples` interior times.
pub fn adiabaticity_ratio<D: Drive + ?Sized>(drive: &D, samples: usize, dt: f64) -> Result<f64> {
    let duration = drive.schedule().duration();
    let mut worst = 0.0f64;
    for i in 1..samples {
        let t = duration * i as f64 / samples as f64;
        worst = worst.max(nonadiabatic_coupling(drive, t, dt)?.adiabaticity());
    }
    Ok(worst)
}

/// What perfect adiabatic following predicts for an initial eigenstate.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticPrediction {
    /// Index of the followed level in the ascending instantaneous spectrum.
    pub level: usize,
    /// ∫ ε(t) dt along the level.
    pub energy_integral: f64,
    /// Final instantaneous eigenvector, sign carried continuously from the start,
    /// times the dynamical phase exp(-i ∫ ε dt).
    pub state: StateVector,
}

/// Follows the level that `psi0` occupies at t = 0 through `samples` steps.
///
/// Real eigenvectors are parallel transported by keeping consecutive overlaps
/// positive; this requires the followed level to stay isolated.
pub fn adiabatic_prediction<D: Drive + ?Sized>(drive: &D, psi0: &StateVector, samples: usize) -> Result<AdiabaticPrediction> {
    let duration = drive.schedule().duration();
    let samples = samples.max(1);
    let (e0, v0) = eigh(&drive.hamiltonian(0.0)?);
    let overlaps: Vec<Complex64> = (0..e0.len())
        .map(|k| {
            let col = crate::linalg::to_complex(&v0.column(k).into_owned());
            col.dotc(psi0.amplitudes())
        })
        .collect();
    let (level, best) = overlaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(k, o)| (k, *o))
        .ok_or_else(|| Error::Config("empty Hamiltonian".into()))?;
    if best.norm_sqr() < 0.99 {
        return Err(Error::Config(format!(
            "initial state is not an instantaneous eigenstate (best overlap {:.4})",
            best.norm_sqr()
        )));
    }
    let mut v = v0.column(level).into_owned();
    // carry the global phase of psi0 along with the eigenvector
    let phase0 = best / best.norm();
    let mut integral = 0.0;
    let mut prev_e = e0[level];
    for i in 1..=samples {
        let t = duration * i as f64 / samples as f64;
        let (e, vecs) = eigh(&drive.hamiltonian(t)?);
        let mut next = vecs.column(level).into_owned();
        if next.dot(&v) < 0.0 {
            next.neg_mut();
        }
        if next.dot(&v).abs() < 0.5 {
            return Err(Error::Numeric(format!(
                "level {level} lost continuity near t = {t}; increase samples or check for crossings"
            )));
        }
        integral += 0.5 * (prev_e + e[level]) * duration / samples as f64;
        prev_e = e[level];
        v = next;
    }
    let state = crate::linalg::to_complex(&v) * (phase0 * Complex64::from_polar(1.0, -integral));
    Ok(AdiabaticPrediction {
        level,
        energy_integral: integral,
        state: StateVector::normalized(state)?,
    })
}
