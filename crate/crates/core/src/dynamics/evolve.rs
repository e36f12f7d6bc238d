use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Schedule;
use crate::lattice::Lattice;
use crate::linalg::{eigh, eigh_hermitian, hermitian_defect, propagate, propagate_hermitian, to_complex, CMatrix, CVector};
use crate::{Error, Result};

/// Drift of ‖ψ‖ from 1 beyond which a run is rejected.
pub const NORM_FAILURE: f64 = 1e-6;

/// Normalized complex amplitudes over lattice sites.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// Wraps `amplitudes`, which must already have unit norm (within 1e-9).
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("state has norm {norm}, expected 1")));
        }
        Ok(StateVector(amplitudes))
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Config("cannot normalize a zero state".into()));
        }
        Ok(StateVector(amplitudes / Complex64::new(norm, 0.0)))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(CVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    /// Real amplitudes placed on `(site, amplitude)` pairs of a `dim`-site lattice, normalized.
    pub fn from_sites(dim: usize, entries: &[(usize, f64)]) -> Result<Self> {
        let mut v = vec![0.0; dim];
        for &(s, a) in entries {
            if s >= dim {
                return Err(Error::Config(format!("site {s} outside 0..{dim}")));
            }
            v[s] += a;
        }
        Self::from_real(&v)
    }

    pub fn site(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        StateVector(v)
    }

    pub(crate) fn from_raw(v: CVector) -> Self {
        StateVector(v)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn scaled(&self, phase: Complex64) -> StateVector {
        StateVector(&self.0 * phase)
    }
}

/// A lattice whose parameters follow a [`Schedule`].
pub trait Drive: Sync {
    fn schedule(&self) -> &Schedule;

    /// Lattice for the given parameter values at time `t`.
    fn lattice_at(&self, t: f64, params: &[f64]) -> Result<Lattice>;

    fn params(&self, t: f64) -> Vec<f64> {
        self.schedule().values(t)
    }

    fn lattice(&self, t: f64) -> Result<Lattice> {
        self.lattice_at(t, &self.params(t))
    }

    fn hamiltonian(&self, t: f64) -> Result<DMatrix<f64>> {
        Ok(self.lattice(t)?.hamiltonian().clone())
    }
}

/// Sampled states of a single evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Sampled evolution of several states at once (one per column).
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
}

impl ColumnTrajectory {
    pub fn last(&self) -> &CMatrix {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn column(&self, c: usize) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self
                .states
                .iter()
                .map(|m| StateVector::from_raw(m.column(c).into_owned()))
                .collect(),
        }
    }
}

/// Step indices at which to record: 0, `steps`, and `samples - 1` evenly spaced points between.
pub fn sample_steps(steps: usize, samples: usize) -> Vec<usize> {
    let samples = samples.max(1);
    let mut out: Vec<usize> = (0..=samples)
        .map(|j| ((j as f64) * steps as f64 / samples as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

fn check_norms(psi: &CMatrix, t: f64) -> Result<()> {
    for (c, col) in psi.column_iter().enumerate() {
        let drift = (col.norm() - 1.0).abs();
        if drift > NORM_FAILURE || drift.is_nan() {
            return Err(Error::Integrator(format!(
                "norm of state {c} drifted by {drift:.3e} at t = {t}; use a smaller dt"
            )));
        }
    }
    Ok(())
}

/// Exponential-midpoint evolution: each step applies exp(-i H(t + dt/2) dt).
///
/// Unitary to rounding, second order in dt. Records `samples + 1` snapshots
/// including both endpoints.
pub fn evolve<D: Drive + ?Sized>(drive: &D, psi0: &StateVector, samples: usize) -> Result<Trajectory> {
    let mut m = CMatrix::zeros(psi0.dim(), 1);
    m.set_column(0, psi0.amplitudes());
    Ok(evolve_columns(drive, m, samples)?.column(0))
}

pub fn evolve_columns<D: Drive + ?Sized>(drive: &D, mut psi: CMatrix, samples: usize) -> Result<ColumnTrajectory> {
    let schedule = drive.schedule();
    let steps = schedule.steps();
    let dt = schedule.step();
    let marks = sample_steps(steps, samples);
    let mut next = 0;
    let mut out = ColumnTrajectory {
        times: Vec::with_capacity(marks.len()),
        states: Vec::with_capacity(marks.len()),
    };
    for k in 0..=steps {
        if next < marks.len() && marks[next] == k {
            let t = k as f64 * dt;
            check_norms(&psi, t)?;
            out.times.push(t);
            out.states.push(psi.clone());
            next += 1;
        }
        if k == steps {
            break;
        }
        let h = drive.hamiltonian((k as f64 + 0.5) * dt)?;
        if h.nrows() != psi.nrows() {
            return Err(Error::Config(format!(
                "state has {} sites but the Hamiltonian has {}",
                psi.nrows(),
                h.nrows()
            )));
        }
        let (values, vectors) = eigh(&h);
        propagate(&values, &vectors, dt, &mut psi);
    }
    Ok(out)
}

/// Exponential-midpoint evolution under a complex Hermitian H(t).
pub fn evolve_hermitian<F>(hamiltonian: F, psi0: &StateVector, duration: f64, dt: f64, samples: usize) -> Result<Trajectory>
where
    F: Fn(f64) -> CMatrix,
{
    let schedule = Schedule::new(duration, dt)?;
    let steps = schedule.steps();
    let dt = schedule.step();
    let marks = sample_steps(steps, samples);
    let mut psi = CMatrix::zeros(psi0.dim(), 1);
    psi.set_column(0, psi0.amplitudes());
    let mut next = 0;
    let mut out = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    for k in 0..=steps {
        if next < marks.len() && marks[next] == k {
            let t = k as f64 * dt;
            check_norms(&psi, t)?;
            out.times.push(t);
            out.states.push(StateVector::from_raw(psi.column(0).into_owned()));
            next += 1;
        }
        if k == steps {
            break;
        }
        let h = hamiltonian((k as f64 + 0.5) * dt);
        if h.nrows() != psi.nrows() || hermitian_defect(&h) > 1e-12 {
            return Err(Error::Numeric(format!(
                "Hamiltonian at t = {} is not a Hermitian {}×{} matrix",
                (k as f64 + 0.5) * dt,
                psi.nrows(),
                psi.nrows()
            )));
        }
        let (values, vectors) = eigh_hermitian(&h);
        propagate_hermitian(&values, &vectors, dt, &mut psi);
    }
    Ok(out)
}

/// Exact propagation under a time-independent Hamiltonian.
#[derive(Clone, Debug)]
pub struct StaticPropagator {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl StaticPropagator {
    pub fn new(h: &DMatrix<f64>) -> Self {
        let (values, vectors) = eigh(h);
        StaticPropagator { values, vectors }
    }

    pub fn energies(&self) -> &[f64] {
        &self.values
    }

    pub fn apply(&self, psi: &StateVector, t: f64) -> StateVector {
        let mut m = CMatrix::zeros(psi.dim(), 1);
        m.set_column(0, psi.amplitudes());
        propagate(&self.values, &self.vectors, t, &mut m);
        StateVector::from_raw(m.column(0).into_owned())
    }

    /// |⟨site|exp(-iHt)|psi⟩|² evaluated from the spectral decomposition.
    pub fn overlap_with_site(&self, psi: &StateVector, site: usize, t: f64) -> Complex64 {
        let coeff = self.vectors.transpose().map(|x| Complex64::new(x, 0.0)) * psi.amplitudes();
        (0..self.values.len())
            .map(|k| coeff[k] * self.vectors[(site, k)] * Complex64::from_polar(1.0, -self.values[k] * t))
            .sum()
    }
}

/// Lift a real vector into a state (normalizing).
pub fn real_state(v: &nalgebra::DVector<f64>) -> Result<StateVector> {
    StateVector::normalized(to_complex(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Bond, Site, SiteKind, Sublattice};

    struct StaticDimer {
        schedule: Schedule,
        u: f64,
    }

    impl Drive for StaticDimer {
        fn schedule(&self) -> &Schedule {
            &self.schedule
        }
        fn lattice_at(&self, _t: f64, _p: &[f64]) -> Result<Lattice> {
            let sites = (0..2)
                .map(|i| Site {
                    kind: SiteKind::Chain { cell: 0, j: 1 },
                    sublattice: Sublattice::alternate(i),
                })
                .collect();
            Lattice::new(sites, vec![Bond { i: 0, j: 1, value: self.u }], vec![0.0; 2])
        }
    }

    #[test]
    fn static_dimer_rabi() {
        let d = StaticDimer {
            schedule: Schedule::new(3.0, 0.01).unwrap(),
            u: 0.4,
        };
        let tr = evolve(&d, &StateVector::site(2, 0), 30).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let p1 = s.amplitudes()[1].norm_sqr();
            assert!((p1 - (0.4 * t).sin().powi(2)).abs() < 1e-12);
        }
        assert_eq!(tr.times.len(), 31);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let d = StaticDimer {
            schedule: Schedule::new(5.0, 0.5).unwrap(),
            u: 0.0,
        };
        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let tr = evolve(&d, &psi, 1).unwrap();
        assert!((tr.last().amplitudes() - psi.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn sample_marks_include_ends() {
        assert_eq!(sample_steps(10, 4), vec![0, 3, 5, 8, 10]);
        assert_eq!(sample_steps(3, 10), vec![0, 1, 2, 3]);
    }

    #[test]
    fn state_constructors() {
        assert!(StateVector::new(CVector::from_element(2, Complex64::new(1.0, 0.0))).is_err());
        let s = StateVector::from_sites(3, &[(0, 1.0), (2, -1.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::from_sites(3, &[(3, 1.0)]).is_err());
        assert!(StateVector::from_real(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn static_propagator_matches_overlap() {
        let h = DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.0, 0.5, 0.0, 0.3, 0.0, 0.3, -0.1]);
        let p = StaticPropagator::new(&h);
        let psi = StateVector::site(3, 0);
        let out = p.apply(&psi, 7.3);
        let direct = p.overlap_with_site(&psi, 2, 7.3);
        assert!((out.amplitudes()[2] - direct).norm() < 1e-13);
    }
}
