//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, Dim, Matrix, RawStorage, SymmetricEigen};

use crate::scalar::Real;

/// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
pub fn min_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

pub fn is_symmetric<T: Real, R: Dim, C: Dim, S: RawStorage<T, R, C>>(
    m: &Matrix<T, R, C, S>,
) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m
        .iter()
        .fold(T::zero(), |a, &x| a.max(x.abs()))
        .max(T::one());
    let tol = T::eps() * T::lit(64.0) * scale;
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Symmetric positive definite test through a Cholesky factorization.
pub fn is_positive_definite<T: Real>(m: &DMatrix<T>) -> bool {
    is_symmetric(m) && m.clone().cholesky().is_some()
}

/// Symmetric positive semidefinite, with eigenvalues allowed down to a
/// round-off sized negative margin.
pub fn is_positive_semidefinite<T: Real>(m: &DMatrix<T>) -> bool {
    if !is_symmetric(m) {
        return false;
    }
    if m.is_empty() {
        return true;
    }
    let scale = m.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    min_eigenvalue(m) >= -(T::eps() * T::lit(64.0) * scale)
}

/// Numerical rank from singular values, relative tolerance `rel_tol * σ_max`.
pub fn rank<T: Real>(m: &DMatrix<T>, rel_tol: T) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax <= T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definiteness_checks() {
        let spd = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!(is_positive_definite(&spd));
        let psd = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(!is_positive_definite(&psd));
        assert!(is_positive_semidefinite(&psd));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
        assert!(!is_positive_definite(&asym));
        assert!(is_positive_semidefinite(&DMatrix::<f64>::zeros(3, 3)));
        assert!((min_eigenvalue(&psd) - 0.0_f64).abs() < 1e-15);
    }

    #[test]
    fn rank_of_wide_matrix() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(rank(&m, 1e-10), 1);
        assert_eq!(rank(&DMatrix::<f64>::zeros(3, 4), 1e-10), 0);
    }
}
