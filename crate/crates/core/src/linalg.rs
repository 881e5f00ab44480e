//! Small dense helpers shared by the mode solver and the synthesis pipeline.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `(m + mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Flip `v` so its largest-magnitude entry is positive. Ties go to the
/// lowest index within a relative 1e-9 band, so symmetric patterns are
/// signed deterministically.
pub fn fix_sign(v: &mut DVector<f64>) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    if let Some(x) = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

/// Eigen-decomposition of a real symmetric matrix with ascending eigenvalues
/// and deterministic eigenvector signs. Columns of the returned matrix are
/// the eigenvectors.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::invalid("matrix", "eigen-decomposition needs a square matrix"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotFinite("symmetric eigen-decomposition input"));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(src).into_owned();
        fix_sign(&mut v);
        vectors.set_column(dst, &v);
    }
    Ok((values, vectors))
}

/// Orthonormal basis of the null space of `rows` (any shape) with the rank
/// cut at `rel_tol · σ_max`. Returns `(basis, rank)`; `basis` is `cols × k`.
pub fn null_space(rows: &DMatrix<f64>, rel_tol: f64) -> Result<(DMatrix<f64>, usize)> {
    let ncols = rows.ncols();
    if rows.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotFinite("constraint matrix"));
    }
    if rows.nrows() == 0 {
        return Ok((DMatrix::identity(ncols, ncols), 0));
    }
    // pad to at least square so the SVD hands back a complete right basis
    let nr = rows.nrows().max(ncols);
    let mut padded = DMatrix::zeros(nr, ncols);
    padded.view_mut((0, 0), (rows.nrows(), ncols)).copy_from(rows);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.ok_or(Error::NotFinite("SVD right vectors"))?;
    let sigma = &svd.singular_values;
    let smax = sigma.iter().fold(0.0f64, |m, s| m.max(*s));
    let cut = rel_tol * smax;
    let mut null_idx: Vec<usize> = (0..sigma.len()).filter(|&k| !(sigma[k] > cut)).collect();
    null_idx.sort_unstable();
    let rank = sigma.len() - null_idx.len();
    let mut basis = DMatrix::zeros(ncols, null_idx.len());
    for (dst, &k) in null_idx.iter().enumerate() {
        let v = vt.row(k).transpose();
        basis.set_column(dst, &v);
    }
    Ok((basis, rank))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, b| a.min(*b))
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()))
}

pub fn quad_form(m: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let mut row = 0.0;
        for j in 0..m.ncols() {
            row += m[(i, j)] * y[j];
        }
        acc += x[i] * row;
    }
    acc
}

pub fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}
