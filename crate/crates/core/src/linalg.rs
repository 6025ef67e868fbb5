//! Small dense helpers: the symmetric inverse square root of an SPD matrix
//! and a rank-revealing Moore-Penrose pseudoinverse.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ControlError, Result};

/// Singular values below `PINV_RTOL * sigma_max` are treated as zero.
pub const PINV_RTOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = a.amax().max(1.0);
    (a - a.transpose()).amax() <= tol * scale
}

/// `R^{-1/2}` using the symmetric principal root. Fails unless `r` is
/// symmetric with strictly positive eigenvalues.
pub fn sym_inverse_sqrt(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !r.is_square() {
        return Err(ControlError::Config(format!(
            "R must be square, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(ControlError::Config("R has non-finite entries".into()));
    }
    if !is_symmetric(r, SYMMETRY_TOL) {
        return Err(ControlError::Config("R must be symmetric".into()));
    }
    let eig = SymmetricEigen::new(r.clone());
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        return Err(ControlError::Config(format!(
            "R must be positive definite (smallest eigenvalue {min:e})"
        )));
    }
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose())
}

/// Moore-Penrose pseudoinverse via SVD, returned together with the numerical
/// rank under the relative cutoff `rtol * sigma_max`.
pub fn pseudo_inverse(a: &DMatrix<f64>, rtol: f64) -> Result<(DMatrix<f64>, usize)> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ControlError::non_finite("pseudoinverse input"));
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = rtol * sigma_max;
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff && **s > 0.0).count();
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let inv = svd
        .singular_values
        .map(|s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 });
    let pinv = v_t.transpose() * DMatrix::from_diagonal(&inv) * u.transpose();
    Ok((pinv, rank))
}
