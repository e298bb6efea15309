//! Hermitian eigendecomposition with a real fast path.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;

/// `true` when every imaginary part is negligible next to the largest entry.
fn is_effectively_real(m: &DMatrix<Complex64>) -> bool {
    let scale = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let max_im = m.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    max_im <= 1e-14 * scale.max(f64::MIN_POSITIVE)
}

/// Eigenvalues of a Hermitian matrix, unsorted. Skips eigenvector accumulation.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let vals: Vec<f64> = if is_effectively_real(m) {
        m.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.symmetric_eigenvalues().iter().copied().collect()
    };
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("hermitian_eigenvalues", "non-finite eigenvalue"));
    }
    Ok(vals)
}

/// Eigenvalues and eigenvectors (columns) of a Hermitian matrix, unsorted.
pub(crate) fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    if is_effectively_real(m) {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::try_new(re, f64::EPSILON, MAX_SWEEPS)
            .ok_or_else(|| Error::numeric("hermitian_eigen", "symmetric QR iteration did not converge"))?;
        let vals = eig.eigenvalues.iter().copied().collect();
        Ok((vals, eig.eigenvectors.map(|v| Complex64::new(v, 0.0))))
    } else {
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
            .ok_or_else(|| Error::numeric("hermitian_eigen", "Hermitian QR iteration did not converge"))?;
        let vals = eig.eigenvalues.iter().copied().collect();
        Ok((vals, eig.eigenvectors))
    }
}
