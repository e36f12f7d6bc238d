use nalgebra::Vector3;
use num_complex::Complex64;

use super::StateVector;
use crate::linalg::CMatrix;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochState {
    pub t: f64,
    pub r: Vector3<f64>,
}

/// Integrates dr/dt = n(t) × r by exact rotations about the midpoint axis.
///
/// Each step rotates r by |n| dt about n(t + dt/2), so |r| is conserved to rounding.
pub fn bloch_evolve<F>(n: F, r0: Vector3<f64>, duration: f64, dt: f64) -> Result<Vec<BlochState>>
where
    F: Fn(f64) -> Vector3<f64>,
{
    if !(duration > 0.0 && dt > 0.0 && dt <= duration) {
        return Err(Error::Config(format!("need 0 < dt <= T, got dt = {dt}, T = {duration}")));
    }
    if (r0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("initial Bloch vector has length {}", r0.norm())));
    }
    let steps = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let mut r = r0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(BlochState { t: 0.0, r });
    for k in 0..steps {
        let axis = n((k as f64 + 0.5) * h);
        r = rotate(r, axis, h);
        out.push(BlochState {
            t: (k + 1) as f64 * h,
            r,
        });
    }
    Ok(out)
}

fn rotate(r: Vector3<f64>, n: Vector3<f64>, dt: f64) -> Vector3<f64> {
    let w = n.norm();
    if w == 0.0 {
        return r;
    }
    let k = n / w;
    let (s, c) = (w * dt).sin_cos();
    r * c + k.cross(&r) * s + k * k.dot(&r) * (1.0 - c)
}

/// H = ½ n·σ.
pub fn two_level_hamiltonian(n: Vector3<f64>) -> CMatrix {
    let z = Complex64::new(0.0, 0.0);
    let mut h = CMatrix::from_element(2, 2, z);
    h[(0, 0)] = Complex64::new(0.5 * n.z, 0.0);
    h[(1, 1)] = Complex64::new(-0.5 * n.z, 0.0);
    h[(0, 1)] = Complex64::new(0.5 * n.x, -0.5 * n.y);
    h[(1, 0)] = Complex64::new(0.5 * n.x, 0.5 * n.y);
    h
}

/// (⟨σx⟩, ⟨σy⟩, ⟨σz⟩).
pub fn bloch_vector(psi: &StateVector) -> Vector3<f64> {
    let a = psi.amplitudes()[0];
    let b = psi.amplitudes()[1];
    let ab = a.conj() * b;
    Vector3::new(2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr())
}

/// Pure state with Bloch vector `r` (unit length).
pub fn state_from_bloch(r: Vector3<f64>) -> Result<StateVector> {
    let theta = r.z.clamp(-1.0, 1.0).acos();
    let phi = r.y.atan2(r.x);
    let mut v = crate::linalg::CVector::zeros(2);
    v[0] = Complex64::new((theta / 2.0).cos(), 0.0);
    v[1] = Complex64::from_polar((theta / 2.0).sin(), phi);
    StateVector::new(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precession_about_z() {
        let tr = bloch_evolve(|_| Vector3::z(), Vector3::x(), 2.0, 0.01).unwrap();
        for s in &tr {
            let want = Vector3::new(s.t.cos(), s.t.sin(), 0.0);
            assert!((s.r - want).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_field_is_static() {
        let r0 = Vector3::new(0.0, 0.6, 0.8);
        let tr = bloch_evolve(|_| Vector3::zeros(), r0, 1.0, 0.1).unwrap();
        assert_eq!(tr.last().unwrap().r, r0);
    }

    #[test]
    fn bloch_round_trip() {
        let r = Vector3::new(0.3, -0.4, 0.5f64.sqrt() * 1.2).normalize();
        let back = bloch_vector(&state_from_bloch(r).unwrap());
        assert!((back - r).norm() < 1e-14);
    }

    #[test]
    fn gap_is_field_magnitude() {
        let n = Vector3::new(0.3, -1.1, 0.7);
        let e = crate::linalg::eigvalsh_hermitian(&two_level_hamiltonian(n));
        assert!((e[1] - e[0] - n.norm()).abs() < 1e-14);
    }
}
