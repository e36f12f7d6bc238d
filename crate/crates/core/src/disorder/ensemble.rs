use serde::Serialize;

use super::{DisorderKind, DisorderSpec, Disordered};
use crate::dynamics::{evolve, fidelity, von_neumann_entropy, density_matrix, Drive, StateVector, Trajectory};
use crate::exec::{map_indexed, Execution};
use crate::{Error, Result};

/// Per-sample ensemble statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub kind: DisorderKind,
    pub sigma: f64,
    pub times: Vec<f64>,
    /// Mean of |⟨ψ_clean(t)|ψ_r(t)⟩|² over realizations r.
    pub mean_fidelity: Vec<f64>,
    pub fidelity_stderr: Vec<f64>,
    /// Von Neumann entropy of the realization-averaged density matrix.
    pub entropy: Vec<f64>,
    /// Final-time fidelity of each surviving realization against the expected state, in realization order.
    pub final_fidelities: Vec<f64>,
    pub n_effective: usize,
    /// (realization, reason) for runs excluded after an integrator failure.
    pub failed: Vec<(usize, String)>,
}

impl EnsembleStats {
    /// Mean and standard error of [`Self::final_fidelities`].
    pub fn final_fidelity(&self) -> (f64, f64) {
        mean_stderr(&self.final_fidelities)
    }
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Evolves `psi0` under `spec.realizations` disordered copies of `drive`.
///
/// Time-resolved fidelities are taken against the disorder-free trajectory;
/// final fidelities against `expected` (the clean final state when `None`).
/// Realizations run under `exec` and are reduced in index order, so the
/// statistics do not depend on the thread count.
pub fn run_ensemble<D: Drive + ?Sized>(
    drive: &D,
    psi0: &StateVector,
    expected: Option<&StateVector>,
    spec: &DisorderSpec,
    samples: usize,
    exec: Execution,
) -> Result<EnsembleStats> {
    spec.validate()?;
    let reference = evolve(drive, psi0, samples)?;
    let target = expected.unwrap_or_else(|| reference.last()).clone();
    let runs: Vec<Result<Trajectory>> = map_indexed(spec.realizations, exec, |i| {
        let d = Disordered::sample(drive, spec, i as u64)?;
        evolve(&d, psi0, samples)
    });

    let mut good = Vec::with_capacity(runs.len());
    let mut failed = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        match r {
            Ok(tr) => good.push(tr),
            Err(e @ Error::Integrator(_)) => failed.push((i, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let n = good.len();
    let samples_out = reference.times.len();
    let mut mean_fidelity = Vec::with_capacity(samples_out);
    let mut fidelity_stderr = Vec::with_capacity(samples_out);
    let mut entropy = Vec::with_capacity(samples_out);
    for j in 0..samples_out {
        let f: Vec<f64> = good.iter().map(|tr| fidelity(&reference.states[j], &tr.states[j])).collect();
        let (m, se) = mean_stderr(&f);
        mean_fidelity.push(m);
        fidelity_stderr.push(se);
        let states: Vec<StateVector> = good.iter().map(|tr| tr.states[j].clone()).collect();
        entropy.push(if n == 0 { f64::NAN } else { von_neumann_entropy(&density_matrix(&states)) });
    }
    let final_fidelities = good.iter().map(|tr| fidelity(&target, tr.last())).collect();
    Ok(EnsembleStats {
        kind: spec.kind,
        sigma: spec.sigma,
        times: reference.times,
        mean_fidelity,
        fidelity_stderr,
        entropy,
        final_fidelities,
        n_effective: n,
        failed,
    })
}

/// Minimum adjacent instantaneous gaps of each realization, in realization order.
pub fn ensemble_min_gaps<D: Drive + ?Sized>(
    drive: &D,
    spec: &DisorderSpec,
    samples: usize,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    map_indexed(spec.realizations, exec, |i| {
        let d = Disordered::sample(drive, spec, i as u64)?;
        crate::dynamics::min_gap(&d, samples)
    })
    .into_iter()
    .collect()
}
