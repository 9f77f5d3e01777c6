//! Dense complex linear-algebra helpers shared by the spectral, metric and
//! dynamics modules. Everything here works on `nalgebra` dynamic matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sorted (descending) singular values.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn hermitian_residual(m: &CMat) -> f64 {
    fro_norm(&(m - m.adjoint()))
}

pub fn is_hermitian(m: &CMat, rel_tol: f64) -> bool {
    hermitian_residual(m) <= rel_tol * fro_norm(m).max(f64::MIN_POSITIVE)
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone().try_inverse().ok_or_else(|| Error::Numerical("matrix is singular".into()))
}

pub fn diag(values: &[Complex64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(values))
}

/// Hermitian eigendecomposition, eigenvalues ascending, orthonormal eigenvector columns.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    // Symmetrize so roundoff in the input does not leak into the solver.
    let h = (m + m.adjoint()) * real(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Complex Schur form `m = Q T Q†`. The QR iteration can cycle on some small
/// structured matrices; those are retried after a fixed unitary similarity.
fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    if let Some(s) = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        return Ok(s.unpack());
    }
    let n = m.nrows();
    let g = CMat::from_fn(n, n, |i, j| c(((7 * i + 3 * j) as f64).sin(), ((5 * i + 11 * j) as f64).cos()));
    let u = g.qr().q();
    let rotated = u.adjoint() * m * &u;
    let (z, t) = nalgebra::linalg::Schur::try_new(rotated, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?
        .unpack();
    Ok((u * z, t))
}

/// Eigenvalues and unit-norm right eigenvectors of a general complex matrix.
///
/// The matrix is reduced to complex Schur form `Q T Q†`; eigenvectors of the
/// triangular factor come from back substitution, with tiny pivots clamped to
/// `eps·‖T‖` the way LAPACK's `ztrevc` does, so coalescing eigenvalues give
/// nearly parallel (not infinite) vectors.
pub fn eig(m: &CMat) -> Result<(Vec<Complex64>, CMat)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let (q, t) = schur(m)?;
    let values: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let smin = (f64::EPSILON * fro_norm(&t)).max(f64::MIN_POSITIVE * 1e3);

    let mut y = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        y[(k, k)] = real(1.0);
        for j in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[(l, k)];
            }
            let mut pivot = t[(j, j)] - lambda;
            if pivot.norm() < smin {
                pivot = real(smin);
            }
            y[(j, k)] = -acc / pivot;
        }
        // Rescale to keep the back substitution bounded.
        let scale = y.column(k).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale > 1.0 {
            let inv = real(1.0 / scale);
            for j in 0..=k {
                y[(j, k)] *= inv;
            }
        }
    }
    let mut vectors = q * y;
    normalize_columns(&mut vectors);
    Ok((values, vectors))
}

pub fn normalize_columns(m: &mut CMat) {
    for mut col in m.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= real(nrm);
        }
    }
}

/// Orthonormal basis (as columns) of the numerical null space: right singular
/// vectors whose singular value is at most `threshold`.
pub fn null_space(m: &CMat, threshold: f64) -> CMat {
    let n = m.ncols();
    // Work with the square Gram-free form: SVD of m itself.
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut cols = Vec::new();
    let k = svd.singular_values.len();
    for i in 0..k {
        if svd.singular_values[i] <= threshold {
            cols.push(v_t.row(i).adjoint());
        }
    }
    // Wide/rank-deficient shapes: rows missing from the thin SVD are null directions.
    if k < n {
        let full = m.clone().adjoint() * m;
        let (vals, vecs) = hermitian_eigen(&full);
        cols.clear();
        for (i, v) in vals.iter().enumerate() {
            if v.abs().sqrt() <= threshold {
                cols.push(vecs.column(i).into_owned());
            }
        }
    }
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Orthonormalize the columns of `m` (modified Gram-Schmidt with one
/// re-orthogonalization pass), dropping columns whose residual norm falls
/// below `drop_tol`.
pub fn orthonormalize(m: &CMat, drop_tol: f64) -> CMat {
    let mut basis: Vec<CVec> = Vec::new();
    for col in m.column_iter() {
        let mut v: CVec = col.into_owned();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let nrm = v.norm();
        if nrm > drop_tol {
            basis.push(v / real(nrm));
        }
    }
    if basis.is_empty() {
        CMat::zeros(m.nrows(), 0)
    } else {
        CMat::from_columns(&basis)
    }
}

/// Smallest singular value of the matrix whose columns are `m`'s columns scaled to unit norm.
pub fn min_singular_value_normalized(m: &CMat) -> f64 {
    let mut normed = m.clone();
    normalize_columns(&mut normed);
    singular_values(&normed).last().copied().unwrap_or(0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_of_triangular_jordan_like_matrix_is_bounded() {
        let m = CMat::from_row_slice(2, 2, &[real(2.0), real(1.0), real(0.0), real(2.0)]);
        let (vals, vecs) = eig(&m).unwrap();
        assert!((vals[0] - real(2.0)).norm() < 1e-14);
        assert!(vecs.iter().all(|z| z.re.is_finite()));
        // Both computed vectors collapse onto e1.
        assert!(min_singular_value_normalized(&vecs) < 1e-10);
    }

    #[test]
    fn eig_reconstructs_random_complex_matrix() {
        let n = 6;
        let m = CMat::from_fn(n, n, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 * 0.5));
        let (vals, vecs) = eig(&m).unwrap();
        let recon = &vecs * diag(&vals) * inverse(&vecs).unwrap();
        assert!(fro_norm(&(recon - &m)) < 1e-10 * fro_norm(&m));
    }

    #[test]
    fn eig_survives_cycling_qr() {
        // Plain QR iteration fails to converge on this 3x3 matrix.
        let m = crate::spin::oat_family(2, crate::spin::REFERENCE_OMEGA, 1.0)(2.72);
        let (vals, vecs) = eig(&m).unwrap();
        let recon = &vecs * diag(&vals) * inverse(&vecs).unwrap();
        assert!(fro_norm(&(recon - &m)) < 1e-12 * fro_norm(&m));
    }

    #[test]
    fn null_space_finds_rank_deficiency() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[real(1.0), real(2.0), real(3.0), real(2.0), real(4.0), real(6.0), real(0.0), real(1.0), real(1.0)],
        );
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 1);
        assert!((&m * ns).norm() < 1e-12);
    }
}
