use matryoshka::dynamics::{
    adiabatic_prediction, bloch_evolve, bloch_vector, evolve, evolve_hermitian, fidelity, min_gap,
    nonadiabatic_coupling, state_from_bloch, two_level_hamiltonian, Curve, Drive, Ramp, Schedule, StateVector,
    StaticPropagator,
};
use matryoshka::lattice::{open_chain, Lattice};
use matryoshka::{CMatrix, Complex64, Error, Result};
use nalgebra::{DMatrix, Vector3};

/// Two sites, hopping `j` and on-site ±d(t).
struct Dimer {
    schedule: Schedule,
    j: f64,
}

impl Dimer {
    fn constant(j: f64, duration: f64, dt: f64) -> Self {
        Dimer {
            schedule: Schedule::new(duration, dt).unwrap().with_curve("d", Curve::constant(0.0)),
            j,
        }
    }

    fn swept(duration: f64, dt: f64) -> Self {
        let d = Curve::ramp(-3.0, 3.0, 0.0, duration, Ramp::Linear).unwrap();
        Dimer {
            schedule: Schedule::new(duration, dt).unwrap().with_curve("d", d),
            j: 0.5,
        }
    }
}

impl Drive for Dimer {
    fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn lattice_at(&self, _t: f64, p: &[f64]) -> Result<Lattice> {
        let lat = open_chain(&[self.j])?;
        lat.with_onsite_offsets(&[p[0], -p[0]])
    }
}

#[test]
fn dimer_population_follows_sin_squared() {
    let drive = Dimer::constant(0.7, 10.0, 0.01);
    let tr = evolve(&drive, &StateVector::site(2, 0), 50).unwrap();
    for (t, s) in tr.times.iter().zip(&tr.states) {
        let p1 = s.probabilities()[1];
        assert!((p1 - (0.7 * t).sin().powi(2)).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn zero_hamiltonian_leaves_state_alone() {
    let psi = StateVector::from_real(&[0.6, 0.8, 0.0]).unwrap();
    let tr = evolve_hermitian(|_| CMatrix::zeros(3, 3), &psi, 5.0, 0.1, 5).unwrap();
    assert_eq!(tr.last(), &psi);
}

#[test]
fn static_propagator_matches_stepping() {
    let h = open_chain(&[0.3, 1.1, 0.8]).unwrap().hamiltonian().clone();
    let psi = StateVector::site(4, 1);
    let exact = StaticPropagator::new(&h).apply(&psi, 7.3);
    let hc = h.map(|x| Complex64::new(x, 0.0));
    let stepped = evolve_hermitian(|_| hc.clone(), &psi, 7.3, 0.73, 1).unwrap();
    assert!(fidelity(&exact, stepped.last()) > 1.0 - 1e-12);
}

#[test]
fn midpoint_rule_is_second_order() {
    let psi = StateVector::site(2, 0);
    let run = |dt| evolve(&Dimer::swept(6.0, dt), &psi, 1).unwrap().last().clone();
    let reference = run(6.0 / 48_000.0);
    let err = |dt| (run(dt).amplitudes() - reference.amplitudes()).norm();
    let (e1, e2) = (err(0.02), err(0.01));
    assert!((e1 / e2 - 4.0).abs() < 0.3, "ratio {}", e1 / e2);
}

#[test]
fn bloch_rotation_agrees_with_schrodinger() {
    let n = |t: f64| Vector3::new(t.cos(), 0.5, 1.0 + 0.3 * t);
    let r0 = Vector3::new(1.0, 0.0, 0.0);
    let bloch = bloch_evolve(n, r0, 4.0, 1e-3).unwrap();
    let schr = evolve_hermitian(|t| two_level_hamiltonian(n(t)), &state_from_bloch(r0).unwrap(), 4.0, 1e-3, 4000)
        .unwrap();
    for (b, s) in bloch.iter().zip(&schr.states) {
        assert!((b.r - bloch_vector(s)).norm() < 1e-9);
    }
    assert!(bloch_evolve(n, Vector3::new(2.0, 0.0, 0.0), 1.0, 0.1).is_err());
}

#[test]
fn static_drive_has_no_nonadiabatic_coupling() {
    let drive = Dimer::constant(1.0, 4.0, 0.01);
    let d = nonadiabatic_coupling(&drive, 2.0, 1e-3).unwrap();
    assert_eq!(d.d.amax(), 0.0);
}

#[test]
fn slow_sweep_follows_the_ground_state() {
    let drive = Dimer::swept(200.0, 0.05);
    // d(0) = -3 puts the ground state mostly on site 0.
    let eig = nalgebra::SymmetricEigen::new(drive.hamiltonian(0.0).unwrap());
    let k = eig.eigenvalues.imin();
    let psi0 = StateVector::from_real(eig.eigenvectors.column(k).as_slice()).unwrap();
    let pred = adiabatic_prediction(&drive, &psi0, 4000).unwrap();
    let fin = evolve(&drive, &psi0, 1).unwrap();
    assert!(fidelity(&pred.state, fin.last()) > 0.999);
    let phase = pred.state.inner(fin.last()).arg();
    // What is left is the slow-sweep correction to the dynamical phase, O(1/T).
    assert!(phase.abs() < 0.05, "phase {phase}");
    let gaps = min_gap(&drive, 400).unwrap();
    assert!((gaps[0] - 1.0).abs() < 1e-3, "avoided crossing gap 2J = 1, got {}", gaps[0]);
}

#[test]
fn non_hermitian_input_is_rejected() {
    let mut h = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
    h[(0, 1)] = Complex64::new(1.0, 0.0);
    let err = evolve_hermitian(move |_| h.clone(), &StateVector::site(2, 0), 1.0, 0.1, 1);
    assert!(matches!(err, Err(Error::Numeric(_))));
}

#[test]
fn dimension_mismatch_is_a_config_error() {
    let drive = Dimer::constant(1.0, 1.0, 0.1);
    assert!(matches!(evolve(&drive, &StateVector::site(3, 0), 1), Err(Error::Config(_))));
}
