//! Thin bridge between order-2 [`Tensor`]s and `nalgebra` dense matrices.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn to_dmatrix(t: &Tensor) -> Result<DMatrix<f64>> {
    if t.order() != 2 {
        return Err(Error::InvalidShape(format!(
            "expected a matrix, got shape {:?}",
            t.dims()
        )));
    }
    Ok(DMatrix::from_row_slice(t.nrows(), t.ncols(), t.data()))
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Tensor {
    let (r, c) = m.shape();
    let mut data = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            data.push(m[(i, j)]);
        }
    }
    Tensor::matrix(r, c, data).expect("finite matrix")
}

pub fn check_square(m: &DMatrix<f64>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidShape(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Symmetry check with a tolerance relative to the largest entry.
pub fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let n = check_square(m, what)?;
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::NotPositiveDefinite(format!(
                    "{what} is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    check_symmetric(m, what)?;
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::NotPositiveDefinite(format!("{what}: Cholesky failed")))?;
    if chol.l_dirty().diagonal().iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::NotPositiveDefinite(format!(
            "{what}: non-positive pivot"
        )));
    }
    Ok(chol)
}

/// `log det` from a Cholesky factor.
pub fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}
