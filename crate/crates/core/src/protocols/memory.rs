use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{StateVector, StaticPropagator};
use crate::lattice::{build_chain, build_memory_system, ChainSpec, MemorySpec, QubitSpec};
use crate::linalg::eigh;
use crate::spectral::{chain_edge_states, EdgeStateReport};
use crate::{CVector, Error, Result};

/// Default qubit-chain coupling.
pub const DEFAULT_COUPLING: f64 = 0.05;
/// Chain eigenstates within this energy of the target count as the target edge state.
pub const EDGE_WINDOW: f64 = 0.02;

fn default_true() -> bool {
    true
}

/// Store for τ, wait decoupled for each t_wait, retrieve for τ.
///
/// Pulses are square: the coupling is either u or 0, so each stage is a
/// time-independent propagation done exactly in the eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryProtocol {
    pub spec: MemorySpec,
    /// Which qubit holds the state; it starts on that qubit's first site.
    #[serde(default)]
    pub qubit: usize,
    /// Transfer time; calibrated when absent.
    #[serde(default)]
    pub tau: Option<f64>,
    pub waits: Vec<f64>,
    /// Fail when the attachment does not overlap a chain eigenstate at the target energy.
    #[serde(default = "default_true")]
    pub require_edge_state: bool,
}

impl MemoryProtocol {
    pub fn new(spec: MemorySpec, waits: Vec<f64>) -> Self {
        MemoryProtocol {
            spec,
            qubit: 0,
            tau: None,
            waits,
            require_edge_state: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubit >= self.spec.qubits.len() {
            return Err(Error::Config(format!(
                "qubit {} requested but only {} defined",
                self.qubit,
                self.spec.qubits.len()
            )));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tau must be positive, got {t}")));
            }
        }
        if let Some(w) = self.waits.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("wait times must be non-negative, got {w}")));
        }
        Ok(())
    }
}

/// Qubit with equal weights on the first two chain sites, resonant with the ε = +1 edge dimer.
pub fn dimer_qubit(energy: f64, coupling: f64) -> QubitSpec {
    QubitSpec {
        hopping: 0.0,
        coupling,
        target_energy: energy,
        attachments: vec![(0, 1.0), (1, if energy >= 0.0 { 1.0 } else { -1.0 })],
    }
}

/// Order-1 chain of `sites` sites with θ = (θ1, π/2 - θ1).
pub fn memory_chain(theta1: f64, sites: usize) -> Result<ChainSpec> {
    Ok(ChainSpec::new(1, vec![theta1, FRAC_PI_2 - theta1], sites.div_ceil(4))?.with_sites(sites))
}

/// Difference of the two chain eigenvalues closest to `energy`.
pub fn edge_splitting(chain: &ChainSpec, energy: f64) -> Result<f64> {
    let lat = build_chain(chain)?;
    let (e, _) = eigh(lat.hamiltonian());
    let mut d: Vec<f64> = e.clone();
    d.sort_by(|a, b| (a - energy).abs().total_cmp(&(b - energy).abs()));
    if d.len() < 2 {
        return Err(Error::Config("chain has fewer than two levels".into()));
    }
    Ok((d[0] - d[1]).abs())
}

/// Prepared store/retrieve experiment.
#[derive(Clone, Debug)]
pub struct MemoryRun {
    pub tau: f64,
    /// π / (2u), the isolated two-level estimate.
    pub tau_estimate: f64,
    /// Weight of the normalized attachment vector on chain eigenstates within [`EDGE_WINDOW`] of the target.
    pub edge_weight: f64,
    pub psi0: StateVector,
    /// State right after the store pulse.
    pub stored: StateVector,
    off_energies: Vec<f64>,
    /// ⟨k|stored⟩ and ⟨k|U_on(-τ) ψ0⟩ in the decoupled eigenbasis.
    a: CVector,
    b: CVector,
}

impl MemoryRun {
    pub fn prepare(p: &MemoryProtocol) -> Result<Self> {
        p.validate()?;
        let qubit = &p.spec.qubits[p.qubit];
        let u = qubit.coupling;
        if !(u.abs() > 0.0) && p.tau.is_none() {
            return Err(Error::Config("cannot calibrate tau with zero coupling; set tau".into()));
        }
        let chain = build_chain(&p.spec.chain)?;
        let n_chain = chain.dim();
        let mut w = DVector::zeros(n_chain);
        for (s, x) in qubit.normalized_weights()? {
            if s >= n_chain {
                return Err(Error::Config(format!("attachment site {s} outside the chain")));
            }
            w[s] += x;
        }
        let (ce, cv) = eigh(chain.hamiltonian());
        let edge_weight: f64 = (0..ce.len())
            .filter(|&k| (ce[k] - qubit.target_energy).abs() < EDGE_WINDOW)
            .map(|k| cv.column(k).dot(&w).powi(2))
            .fold(0.0, |a, b| a + b);
        if p.require_edge_state && edge_weight < 0.5 {
            return Err(Error::MissingEdgeState(format!(
                "no chain eigenstate near ε = {} overlaps the attachment (weight {edge_weight:.3})",
                qubit.target_energy
            )));
        }

        let on = build_memory_system(&p.spec)?;
        let off = build_memory_system(&p.spec.with_coupling(0.0))?;
        let on = StaticPropagator::new(on.hamiltonian());
        let dim = off.dim();
        let q0 = p.spec.qubit_site(p.qubit, 0);
        let psi0 = StateVector::site(dim, q0);
        let tau_estimate = PI / (2.0 * u.abs());
        let tau = match p.tau {
            Some(t) => t,
            None => calibrate_tau(&on, &psi0, &[q0, q0 + 1], tau_estimate),
        };
        let stored = on.apply(&psi0, tau);
        let back = on.apply(&psi0, -tau);
        let (off_energies, vectors) = eigh(off.hamiltonian());
        let vt = vectors.transpose().map(|x| Complex64::new(x, 0.0));
        Ok(MemoryRun {
            tau,
            tau_estimate,
            edge_weight,
            a: &vt * stored.amplitudes(),
            b: &vt * back.amplitudes(),
            psi0,
            stored,
            off_energies,
        })
    }

    /// |⟨ψ0| U_on(τ) U_off(t_wait) U_on(τ) |ψ0⟩|².
    pub fn fidelity(&self, wait: f64) -> f64 {
        let amp: Complex64 = (0..self.off_energies.len())
            .map(|k| self.b[k].conj() * self.a[k] * Complex64::from_polar(1.0, -self.off_energies[k] * wait))
            .sum();
        amp.norm_sqr()
    }

    /// Probability left on the qubit sites right after storing.
    pub fn residual_on_qubit(&self, sites: &[usize]) -> f64 {
        sites.iter().map(|&s| self.stored.amplitudes()[s].norm_sqr()).sum()
    }

    /// Half-period of the slow fidelity oscillation: midpoint of the first
    /// interval where F stays below 1/2, scanning `points` waits in [0, t_max].
    pub fn half_period(&self, t_max: f64, points: usize) -> Option<f64> {
        let mut down = None;
        for i in 0..=points {
            let t = t_max * i as f64 / points as f64;
            let below = self.fidelity(t) < 0.5;
            match (down, below) {
                (None, true) => down = Some(t),
                (Some(d), false) => return Some(0.5 * (d + t)),
                _ => {}
            }
        }
        None
    }

    /// Wait time of the first interior local maximum of F on a `points` grid over [0, t_max].
    pub fn first_peak(&self, t_max: f64, points: usize) -> Option<f64> {
        let f: Vec<f64> = (0..=points).map(|i| self.fidelity(t_max * i as f64 / points as f64)).collect();
        (1..points)
            .find(|&i| f[i] >= f[i - 1] && f[i] > f[i + 1])
            .map(|i| t_max * i as f64 / points as f64)
    }
}

/// First minimum of the population on `sites`, searched on (0, 1.5 τ0] and refined.
fn calibrate_tau(on: &StaticPropagator, psi0: &StateVector, sites: &[usize], tau0: f64) -> f64 {
    let pop = |t: f64| -> f64 {
        let s = on.apply(psi0, t);
        sites.iter().map(|&i| s.amplitudes()[i].norm_sqr()).sum()
    };
    const GRID: usize = 600;
    let h = 1.5 * tau0 / GRID as f64;
    let (best, _) = (1..=GRID)
        .map(|i| (i, pop(i as f64 * h)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    // golden-section refinement on the bracketing cells
    let (mut lo, mut hi) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (pop(x1), pop(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = pop(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = pop(x2);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemoryReport {
    pub tau: f64,
    pub tau_estimate: f64,
    pub edge_weight: f64,
    pub waits: Vec<f64>,
    pub fidelities: Vec<f64>,
    /// Largest |‖ψ‖ - 1| over the three stages.
    pub norm_drift: f64,
}

pub fn run_memory(p: &MemoryProtocol) -> Result<MemoryReport> {
    let run = MemoryRun::prepare(p)?;
    let fidelities = p.waits.iter().map(|&w| run.fidelity(w)).collect();
    let norm_drift = (run.stored.norm() - 1.0).abs().max((run.a.norm() - 1.0).abs());
    Ok(MemoryReport {
        tau: run.tau,
        tau_estimate: run.tau_estimate,
        edge_weight: run.edge_weight,
        waits: p.waits.clone(),
        fidelities,
        norm_drift,
    })
}

/// One addressable channel of the qudit memory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuditChannel {
    pub label: String,
    pub energy: f64,
    pub weights: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuditMemoryProtocol {
    pub chain: ChainSpec,
    pub channels: Vec<QuditChannel>,
    pub coupling: f64,
    pub wait: f64,
    /// Largest ‖H w - ε w‖ accepted for normalized weights w.
    pub eigen_tolerance: f64,
}

impl QuditMemoryProtocol {
    /// Angles (π/6, π/4, π/6, 0) on 80 mirrored sites, with the ε = 0 channel at each end.
    pub fn eighty_site() -> Result<Self> {
        let chain = ChainSpec::new(2, vec![PI / 6.0, PI / 4.0, PI / 6.0, 0.0], 10)?
            .with_sites(80)
            .mirrored();
        let t = (PI / 6.0).tan();
        let u = (PI / 4.0).tan();
        let zero = [1.0, -t, t * u, -t * t * u];
        let left = zero.iter().enumerate().map(|(k, &w)| (2 * k, w)).collect();
        let right = zero.iter().enumerate().map(|(k, &w)| (79 - 2 * k, w)).collect();
        Ok(QuditMemoryProtocol {
            chain,
            channels: vec![
                QuditChannel {
                    label: "0,L".into(),
                    energy: 0.0,
                    weights: left,
                },
                QuditChannel {
                    label: "0,R".into(),
                    energy: 0.0,
                    weights: right,
                },
            ],
            coupling: 0.01,
            wait: 100.0,
            eigen_tolerance: 1e-8,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuditChannelReport {
    pub label: String,
    pub energy: f64,
    pub eigen_residual: f64,
    pub tau: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuditMemoryReport {
    pub edge_states: EdgeStateReport,
    pub channels: Vec<QuditChannelReport>,
}

/// ‖H w - ε w‖ for the normalized weights of `channel` on `chain`.
pub fn eigen_residual(chain: &ChainSpec, channel: &QuditChannel) -> Result<f64> {
    let lat = build_chain(chain)?;
    let mut w = DVector::zeros(lat.dim());
    for &(s, x) in &channel.weights {
        if s >= lat.dim() {
            return Err(Error::Config(format!("channel {} attaches to missing site {s}", channel.label)));
        }
        w[s] += x;
    }
    let norm = w.norm();
    if norm == 0.0 {
        return Err(Error::Config(format!("channel {} has zero weights", channel.label)));
    }
    w /= norm;
    Ok((lat.hamiltonian() * &w - &w * channel.energy).norm())
}

pub fn run_qudit_memory(p: &QuditMemoryProtocol) -> Result<QuditMemoryReport> {
    let (_, _, edge_states) = chain_edge_states(&p.chain, 0.15)?;
    let mut channels = Vec::with_capacity(p.channels.len());
    for ch in &p.channels {
        let eigen_residual = eigen_residual(&p.chain, ch)?;
        if eigen_residual > p.eigen_tolerance {
            return Err(Error::Config(format!(
                "channel {} weights are not an eigenstate at ε = {} (residual {eigen_residual:.3e})",
                ch.label, ch.energy
            )));
        }
        let spec = MemorySpec {
            chain: p.chain.clone(),
            qubits: vec![QubitSpec {
                hopping: 0.0,
                coupling: p.coupling,
                target_energy: ch.energy,
                attachments: ch.weights.clone(),
            }],
        };
        let run = MemoryRun::prepare(&MemoryProtocol::new(spec, vec![p.wait]))?;
        channels.push(QuditChannelReport {
            label: ch.label.clone(),
            energy: ch.energy,
            eigen_residual,
            tau: run.tau,
            fidelity: run.fidelity(p.wait),
        });
    }
    Ok(QuditMemoryReport { edge_states, channels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrected_weights_are_zero_modes() {
        let p = QuditMemoryProtocol::eighty_site().unwrap();
        for ch in &p.channels {
            assert!(eigen_residual(&p.chain, ch).unwrap() < 1e-12);
        }
        let t = (PI / 6.0).tan();
        let printed = QuditChannel {
            label: "printed".into(),
            energy: 0.0,
            weights: vec![(0, 1.0), (2, -t), (4, -t), (6, -t * t)],
        };
        assert!(eigen_residual(&p.chain, &printed).unwrap() > 0.1);
    }

    #[test]
    fn dimerized_storage_is_perfect() {
        let spec = MemorySpec {
            chain: memory_chain(FRAC_PI_2, 21).unwrap(),
            qubits: vec![dimer_qubit(1.0, DEFAULT_COUPLING)],
        };
        let r = run_memory(&MemoryProtocol::new(spec, vec![0.0, 17.0, 1234.5])).unwrap();
        assert!((r.tau - r.tau_estimate).abs() < 1e-6, "{} vs {}", r.tau, r.tau_estimate);
        assert!(r.fidelities.iter().all(|&f| f > 1.0 - 1e-9), "{:?}", r.fidelities);
    }

    #[test]
    fn zero_coupling_keeps_qubit_still() {
        let spec = MemorySpec {
            chain: memory_chain(FRAC_PI_2, 21).unwrap(),
            qubits: vec![dimer_qubit(1.0, 0.0)],
        };
        let mut p = MemoryProtocol::new(spec, vec![0.0, 50.0]);
        p.tau = Some(10.0);
        let r = run_memory(&p).unwrap();
        assert!(r.fidelities.iter().all(|&f| (f - 1.0).abs() < 1e-12));
    }
}
