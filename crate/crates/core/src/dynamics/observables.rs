use nalgebra::DMatrix;
use num_complex::Complex64;

use super::StateVector;
use crate::linalg::{eigvalsh_hermitian, CMatrix};

/// |⟨a|b⟩|².
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).norm_sqr()
}

/// Fidelity and the phase of ⟨expected|actual⟩, i.e. the global phase that best aligns them.
pub fn phase_aligned(expected: &StateVector, actual: &StateVector) -> (f64, f64) {
    let o = expected.inner(actual);
    (o.norm_sqr(), o.arg())
}

/// Wrap an angle into (-π, π].
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Mean of |ψ⟩⟨ψ| over the given states.
pub fn density_matrix(states: &[StateVector]) -> CMatrix {
    let n = states.first().map_or(0, StateVector::dim);
    let mut rho = CMatrix::zeros(n, n);
    for s in states {
        let a = s.amplitudes();
        rho.ger(Complex64::new(1.0, 0.0), a, &a.conjugate(), Complex64::new(1.0, 0.0));
    }
    if !states.is_empty() {
        rho /= Complex64::new(states.len() as f64, 0.0);
    }
    rho
}

/// -Tr ρ ln ρ with eigenvalues clamped at zero.
pub fn von_neumann_entropy(rho: &CMatrix) -> f64 {
    eigvalsh_hermitian(rho)
        .into_iter()
        .filter(|&p| p > 1e-15)
        .map(|p| -p * p.ln())
        .sum()
}

/// Von Neumann entropy of the equal-weight mixture of `states`.
pub fn ensemble_entropy(states: &[StateVector]) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    von_neumann_entropy(&density_matrix(states))
}

/// ⟨ψ|H|ψ⟩.
pub fn energy(psi: &StateVector, h: &DMatrix<f64>) -> f64 {
    let a = psi.amplitudes();
    let hc = h.map(|x| Complex64::new(x, 0.0));
    a.dotc(&(hc * a)).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fidelity_examples() {
        let a = StateVector::site(3, 0);
        let b = StateVector::site(3, 1);
        let ab = StateVector::from_real(&[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(fidelity(&a, &a), 1.0);
        assert_eq!(fidelity(&a, &b), 0.0);
        assert!((fidelity(&ab, &a) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        let pure = vec![StateVector::from_real(&[0.6, 0.8]).unwrap(); 5];
        assert!(ensemble_entropy(&pure).abs() < 1e-12);
        let seven: Vec<_> = (0..7).map(|i| StateVector::site(7, i)).collect();
        assert!((ensemble_entropy(&seven) - 7f64.ln()).abs() < 1e-12);
        let two = [StateVector::site(4, 0), StateVector::site(4, 3)];
        assert!((ensemble_entropy(&two) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn phase_alignment() {
        let a = StateVector::site(2, 1);
        let b = a.scaled(Complex64::from_polar(1.0, 0.7));
        let (f, ph) = phase_aligned(&a, &b);
        assert!((f - 1.0).abs() < 1e-15 && (ph - 0.7).abs() < 1e-15);
        assert!((wrap_phase(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_phase(-0.5) + 0.5).abs() < 1e-15);
    }
}
