use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest |H_ij - H_ji|.
pub(crate) fn asymmetry(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn hermitian_defect(h: &CMatrix) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Flip the column sign so that its largest-magnitude entry is positive.
/// Ties within 1e-10 go to the lowest index.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs + 1e-10 {
            best = i;
            best_abs = x.abs();
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigen-decomposition of a real symmetric matrix, ascending energies, sign-fixed columns.
pub(crate) fn eigh(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
        fix_sign(&mut col);
        vectors.set_column(dst, &DVector::from_vec(col));
    }
    (values, vectors)
}

pub(crate) fn eigvalsh(h: &DMatrix<f64>) -> Vec<f64> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Hermitian eigen-decomposition, ascending.
pub(crate) fn eigh_hermitian(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub(crate) fn eigvalsh_hermitian(h: &CMatrix) -> Vec<f64> {
    eigh_hermitian(h).0
}

/// psi <- V exp(-i E dt) V^T psi for every column of psi.
pub(crate) fn propagate(values: &[f64], vectors: &DMatrix<f64>, dt: f64, psi: &mut CMatrix) {
    let n = vectors.nrows();
    let phases: Vec<Complex64> = values
        .iter()
        .map(|e| Complex64::from_polar(1.0, -e * dt))
        .collect();
    let mut coeff = vec![ZERO; n];
    for col in 0..psi.ncols() {
        for (k, c) in coeff.iter_mut().enumerate() {
            let v = vectors.column(k);
            let mut acc = ZERO;
            for i in 0..n {
                acc += psi[(i, col)] * v[i];
            }
            *c = acc * phases[k];
        }
        for i in 0..n {
            let mut acc = ZERO;
            for (k, c) in coeff.iter().enumerate() {
                acc += c * vectors[(i, k)];
            }
            psi[(i, col)] = acc;
        }
    }
}

/// psi <- V exp(-i E dt) V^dagger psi for a Hermitian decomposition.
pub(crate) fn propagate_hermitian(values: &[f64], vectors: &CMatrix, dt: f64, psi: &mut CMatrix) {
    let phases = DVector::from_iterator(
        values.len(),
        values.iter().map(|e| Complex64::from_polar(1.0, -e * dt)),
    );
    let mut coeff = vectors.adjoint() * &*psi;
    for mut col in coeff.column_iter_mut() {
        col.component_mul_assign(&phases);
    }
    *psi = vectors * coeff;
}

pub(crate) fn to_complex(v: &DVector<f64>) -> CVector {
    v.map(|x| Complex64::new(x, 0.0))
}
