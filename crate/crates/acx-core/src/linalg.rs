//! Small dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::math::{acos, sqrt};

/// Orthonormal basis (as columns) of the null space of `a`, using singular
/// values below `rel_tol * sigma_max` as zero.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    // pad to a square matrix so the SVD returns a full right basis
    let rows = m.max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&k| svd.singular_values[k] <= rel_tol * smax.max(f64::MIN_POSITIVE))
        .map(|k| vt.row(k).transpose())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Number of singular values of `a` below `rel_tol * sigma_max`, counting
/// missing rows as zero singular values (rank deficiency w.r.t. columns).
pub fn rank_deficiency(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let n = a.ncols();
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > rel_tol * smax).count();
    n - rank
}

/// Modified Gram-Schmidt on the columns of `a`. Returns the orthonormal
/// columns and the smallest pivot norm relative to the largest column norm.
pub fn orthonormalize(a: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let mut q = a.clone();
    let maxnorm = (0..a.ncols()).map(|k| a.column(k).norm()).fold(0.0, f64::max);
    let mut minpivot = f64::INFINITY;
    for k in 0..q.ncols() {
        for _ in 0..2 {
            for j in 0..k {
                let proj = q.column(j).dot(&q.column(k));
                let qj = q.column(j).clone_owned();
                let mut ck = q.column_mut(k);
                ck.axpy(-proj, &qj, 1.0);
            }
        }
        let nrm = q.column(k).norm();
        minpivot = minpivot.min(nrm);
        if nrm > 0.0 {
            q.column_mut(k).scale_mut(1.0 / nrm);
        }
    }
    let ratio = if maxnorm > 0.0 { minpivot / maxnorm } else { 0.0 };
    (q, ratio)
}

/// Orthonormal basis of the orthogonal complement of the column span of `a`
/// (columns assumed independent) in `R^n`.
pub fn orthogonal_complement(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let (q, _) = orthonormalize(a);
    let mut basis: Vec<DVector<f64>> = (0..q.ncols()).map(|k| q.column(k).clone_owned()).collect();
    let mut out = Vec::new();
    for e in 0..n {
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let p = b.dot(&v);
                v.axpy(-p, b, 1.0);
            }
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            v /= nrm;
            basis.push(v.clone());
            out.push(v);
        }
        if out.len() + q.ncols() == n {
            break;
        }
    }
    if out.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&out)
}

/// Smallest principal angle (radians) between the column spans of two
/// orthonormal bases.
pub fn smallest_principal_angle(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> f64 {
    let m = q1.transpose() * q2;
    let sv = m.svd(false, false).singular_values;
    acos(sv.max())
}

/// Symmetric part of a square matrix.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    a.clone().symmetric_eigen().eigenvalues.min()
}

/// Largest absolute eigenvalue bound and smallest absolute eigenvalue of a
/// symmetric matrix.
pub fn min_abs_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    a.clone().symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()))
}

/// Real linear map `L` closest to the identity (Frobenius) with
/// `L K = J_st L`, i.e. `L K L^{-1} = J_st`.
pub fn conjugator_to_standard(k: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = k.nrows();
    let jst = crate::field::j_st(n);
    // vec(L K - J L) = (K^T kron I - I kron J) vec(L), column-major vec
    let nn = n * n;
    let mut a = DMatrix::zeros(nn, nn);
    for col in 0..n {
        for row in 0..n {
            let idx = col * n + row; // L[row, col]
            // (L K)[r, c] = sum_j L[r, j] K[j, c]
            for c in 0..n {
                a[(c * n + row, idx)] += k[(col, c)];
            }
            // (J L)[r, c] = sum_j J[r, j] L[j, c]
            for r in 0..n {
                a[(col * n + r, idx)] -= jst[(r, row)];
            }
        }
    }
    let ns = null_space(&a, 1e-10);
    if ns.ncols() == 0 {
        return None;
    }
    let id = DMatrix::<f64>::identity(n, n);
    let vid = DVector::from_column_slice(id.as_slice());
    let coeffs = ns.transpose() * &vid;
    let vl = &ns * coeffs;
    let l = DMatrix::from_column_slice(n, n, vl.as_slice());
    if l.clone().try_inverse().is_none() || l.determinant().abs() < 1e-12 {
        return None;
    }
    Some(l)
}

pub fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn null_space_of_row() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&a, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert_abs_diff_eq!((&a * &n).amax(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn conjugator_is_identity_for_standard() {
        let j = crate::field::j_st(4);
        let l = conjugator_to_standard(&j).unwrap();
        assert_abs_diff_eq!((l - DMatrix::identity(4, 4)).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conjugator_solves_equation() {
        let s = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.1, 0.0, 0.2, 0.0, 1.0, 0.3, 0.0, 0.1, 0.0, 1.0, 0.0, 0.0, 0.2, 0.1, 1.0,
        ]);
        let k = &s * crate::field::j_st(4) * s.clone().try_inverse().unwrap();
        let l = conjugator_to_standard(&k).unwrap();
        let r = &l * &k - crate::field::j_st(4) * &l;
        assert_abs_diff_eq!(r.amax(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn principal_angle_of_orthogonal_planes() {
        let q1 = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let q2 = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(smallest_principal_angle(&q1, &q2), crate::math::PI / 2.0, epsilon = 1e-12);
    }
}
