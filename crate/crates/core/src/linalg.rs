//! Small dense linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    if m.is_empty() {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part, with its eigenvector.
pub fn min_eigenpair(m: &CMatrix) -> (f64, DVector<C64>) {
    let (values, vectors) = hermitian_eigh(m);
    if values.is_empty() {
        return (0.0, DVector::zeros(0));
    }
    (values[0], vectors.column(0).into_owned())
}

/// Unitary exponential `exp(K)` of an anti-Hermitian `K`, via the spectral
/// decomposition of the Hermitian matrix `-iK`.
pub fn expm_antihermitian(k: &CMatrix) -> CMatrix {
    let n = k.nrows();
    if n == 1 {
        return CMatrix::from_element(1, 1, C64::new(0.0, k[(0, 0)].im).exp());
    }
    let herm = k * (-I);
    let (values, v) = hermitian_eigh(&herm);
    let mut scaled = v.clone();
    for (j, lam) in values.iter().enumerate() {
        let phase = C64::new(0.0, *lam).exp();
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// `‖UᴴU − 1‖_F`, an upper bound for the spectral-norm defect.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

/// Pairwise summation of equally-shaped vectors. The association order
/// depends only on the number of terms.
pub fn pairwise_sum(terms: &[Vec<C64>]) -> Vec<C64> {
    match terms.len() {
        0 => Vec::new(),
        1 => terms[0].clone(),
        len => {
            let (lo, hi) = terms.split_at(len / 2);
            let mut a = pairwise_sum(lo);
            let b = pairwise_sum(hi);
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        }
    }
}

pub fn pairwise_sum_real(terms: &[Vec<f64>]) -> Vec<f64> {
    match terms.len() {
        0 => Vec::new(),
        1 => terms[0].clone(),
        len => {
            let (lo, hi) = terms.split_at(len / 2);
            let mut a = pairwise_sum_real(lo);
            let b = pairwise_sum_real(hi);
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_i_sigma_z() {
        let k = CMatrix::from_row_slice(2, 2, &[I * 0.7, ZERO, ZERO, -I * 0.7]);
        let u = expm_antihermitian(&k);
        assert!((u[(0, 0)] - C64::new(0.0, 0.7).exp()).norm() < 1e-15);
        assert!((u[(1, 1)] - C64::new(0.0, -0.7).exp()).norm() < 1e-15);
        assert!(unitarity_defect(&u) < 1e-14);
    }

    #[test]
    fn exp_matches_pade() {
        let x = CMatrix::from_fn(3, 3, |i, j| {
            C64::new((i + 2 * j) as f64 * 0.1, (i * j) as f64 * 0.2 - 0.1)
        });
        let k = (&x - x.adjoint()) * C64::new(0.5, 0.0);
        let diff = expm_antihermitian(&k) - k.exp();
        assert!(spectral_norm(&diff) < 1e-13);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let terms: Vec<Vec<C64>> = (0..1001)
            .map(|k| vec![C64::new(k as f64, -(k as f64))])
            .collect();
        assert_eq!(pairwise_sum(&terms)[0], C64::new(500500.0, -500500.0));
    }
}
