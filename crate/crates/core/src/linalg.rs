//! Dense decompositions that fail instead of looping on non-finite input.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

const MAX_SWEEPS: usize = 10_000;

fn finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub(crate) fn sym_eigen(m: DMatrix<f64>) -> Option<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !finite(&m) {
        return None;
    }
    SymmetricEigen::try_new(m, f64::EPSILON, MAX_SWEEPS)
}

pub(crate) fn min_sym_eigenvalue(m: DMatrix<f64>) -> Option<f64> {
    sym_eigen(m).map(|e| e.eigenvalues.min())
}

pub(crate) fn singular_values(m: DMatrix<f64>) -> Option<DVector<f64>> {
    if !finite(&m) {
        return None;
    }
    SVD::try_new(m, false, false, f64::EPSILON, MAX_SWEEPS).map(|s| s.singular_values)
}

/// Least-squares solution with singular values below `eps` dropped.
pub(crate) fn svd_solve(a: DMatrix<f64>, b: &DVector<f64>, eps: f64) -> Option<DVector<f64>> {
    if !finite(&a) || b.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let svd = SVD::try_new(a, true, true, f64::EPSILON, MAX_SWEEPS)?;
    svd.solve(b, eps).ok().filter(|x| x.iter().all(|v| v.is_finite()))
}
