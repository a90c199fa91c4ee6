//! Operations on a single almost complex structure: validity, the
//! (1,0)/(0,1) splitting, the Levi form, pseudoconvexity and chart
//! normalization.
//!
//! Sign convention: `J^* dr = dr o J`. With it the raw form
//! `-d(J^* dr)(X, JX)` of `|z|^2` at `J_st` equals `4 |v|^2`; [`levi_form`]
//! divides by four so that it equals `|v|^2`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{err, Result};
use crate::field::{c2_distance_to_const, j_st, ScalarField, StructureField, TangentVector, C2_GRID};
use crate::linalg::{conjugator_to_standard, min_eigenvalue, null_space, sym};

/// Residual bound for `J^2 = -I`.
pub const STRUCTURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub pass: bool,
}

/// Max of `||J(z)^2 + I||_inf` over `samples`; passes at `1e-10`.
pub fn check_structure(j: &StructureField, samples: &[Vec<f64>]) -> Result<StructureReport> {
    let dim = j.dim();
    let mut worst = 0.0;
    let mut worst_point = Vec::new();
    for z in samples {
        if z.len() != dim {
            return Err(err!(Dimension, "sample of length {} for a field of dimension {dim}", z.len()));
        }
        let m = j.matrix(z);
        if m.nrows() != m.ncols() || m.nrows() != dim {
            return Err(err!(Dimension, "matrix oracle returned {}x{}", m.nrows(), m.ncols()));
        }
        let r = (&m * &m + DMatrix::identity(dim, dim)).amax();
        if r > worst || worst_point.is_empty() {
            worst = r;
            worst_point = z.clone();
        }
    }
    Ok(StructureReport { max_residual: worst, worst_point, pass: worst <= STRUCTURE_TOL })
}

fn complexify(v: &[f64]) -> DVector<Complex64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0)))
}

/// `(v10, v01) = ((v - iJv)/2, (v + iJv)/2)`.
pub fn split_vector(j: &StructureField, v: &TangentVector) -> (DVector<Complex64>, DVector<Complex64>) {
    let jm = j.matrix(&v.base);
    let jv = &jm * DVector::from_column_slice(&v.v);
    let vv = complexify(&v.v);
    let ijv = complexify(jv.as_slice()) * Complex64::new(0.0, 1.0);
    ((&vv - &ijv) * Complex64::new(0.5, 0.0), (&vv + &ijv) * Complex64::new(0.5, 0.0))
}

/// Bidegree of a covector with respect to a structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bidegree {
    OneZero,
    ZeroOne,
    Mixed,
}

/// Complex covector at a base point, in the real coframe `dx1, dy1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormValue {
    pub base: Vec<f64>,
    pub w: DVector<Complex64>,
    pub bidegree: Bidegree,
}

impl FormValue {
    pub fn apply(&self, v: &DVector<Complex64>) -> Complex64 {
        self.w.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
    }

    /// Coefficients in the coframe `dz^j, dzbar^j`: returns `(a, b)` with
    /// `w = sum a_j dz^j + b_j dzbar^j`.
    pub fn complex_coefficients(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.w.len() / 2;
        let i = Complex64::new(0.0, 1.0);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for k in 0..n {
            // w_x dx + w_y dy with dx = (dz + dzb)/2, dy = (dz - dzb)/(2i)
            let wx = self.w[2 * k];
            let wy = self.w[2 * k + 1];
            a.push((wx - i * wy) * 0.5);
            b.push((wx + i * wy) * 0.5);
        }
        (a, b)
    }
}

fn parts_of(j: &StructureField, du: &DVector<f64>, z: &[f64]) -> (DVector<Complex64>, DVector<Complex64>) {
    let jm = j.matrix(z);
    // (J^* du)_a = sum_b du_b J_ba
    let jdu = jm.transpose() * du;
    let a = complexify(du.as_slice());
    let b = complexify(jdu.as_slice()) * Complex64::new(0.0, 1.0);
    ((&a - &b) * Complex64::new(0.5, 0.0), (&a + &b) * Complex64::new(0.5, 0.0))
}

/// `dbar_J u = (du + i J^* du)/2` at `z`.
pub fn dbar(j: &StructureField, u: &ScalarField, z: &[f64]) -> FormValue {
    let du = u.gradient(z);
    let (_, w) = parts_of(j, &du, z);
    FormValue { base: z.to_vec(), w, bidegree: Bidegree::ZeroOne }
}

/// `d_J u = (du - i J^* du)/2` at `z`.
pub fn del(j: &StructureField, u: &ScalarField, z: &[f64]) -> FormValue {
    let du = u.gradient(z);
    let (w, _) = parts_of(j, &du, z);
    FormValue { base: z.to_vec(), w, bidegree: Bidegree::OneZero }
}

/// Symmetric matrix `S` with `-d(J^* dr)(X, JX) = X^T S X` at `z`.
pub fn levi_matrix_raw(j: &StructureField, r: &ScalarField, z: &[f64]) -> DMatrix<f64> {
    levi_matrix_from_jet(&j.matrix(z), &j.derivatives(z), &r.gradient(z), &r.hessian(z))
}

/// [`levi_matrix_raw`] from pointwise data: `J`, `dJ/dx^c`, gradient and
/// Hessian of `r`. Linear in `(g, h)`.
pub fn levi_matrix_from_jet(jm: &DMatrix<f64>, dj: &[DMatrix<f64>], g: &DVector<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    let n = jm.nrows();
    // d_c theta_a with theta_a = sum_b r_b J_ba
    let mut dtheta = DMatrix::zeros(n, n);
    for c in 0..n {
        for a in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                s += h[(b, c)] * jm[(b, a)] + g[b] * dj[c][(b, a)];
            }
            dtheta[(c, a)] = s;
        }
    }
    let m = &dtheta - dtheta.transpose();
    -sym(&(m * jm))
}

/// Normalized Levi quadratic form: `levi_matrix_raw / 4`.
pub fn levi_matrix(j: &StructureField, r: &ScalarField, z: &[f64]) -> DMatrix<f64> {
    levi_matrix_raw(j, r, z) * 0.25
}

/// `L^J(r)(X)`, normalized so that `L^{J_st}(|z|^2)(v) = |v|^2`.
pub fn levi_form(j: &StructureField, r: &ScalarField, x: &TangentVector) -> f64 {
    let s = levi_matrix(j, r, &x.base);
    let v = DVector::from_column_slice(&x.v);
    v.dot(&(s * &v))
}

/// Orthonormal real basis (columns) of `H^J_z = {dr(v) = dr(Jv) = 0}`.
pub fn holomorphic_tangent(j: &StructureField, r: &ScalarField, z: &[f64]) -> Result<DMatrix<f64>> {
    let g = r.gradient(z);
    if g.norm() < 1e-12 {
        return Err(err!(Degenerate, "dr vanishes at {:?}", z));
    }
    let jm = j.matrix(z);
    let jg = jm.transpose() * &g;
    let a = DMatrix::from_rows(&[g.transpose(), jg.transpose()]);
    Ok(null_space(&a, 1e-10))
}

/// Minimum of the Levi form over unit vectors of `H^J_z`.
pub fn levi_min_on_tangent(j: &StructureField, r: &ScalarField, z: &[f64]) -> Result<f64> {
    let b = holomorphic_tangent(j, r, z)?;
    let s = levi_matrix(j, r, z);
    Ok(min_eigenvalue(&(b.transpose() * s * &b)))
}

/// Restricted Levi matrix on `H^J_z` in the basis from [`holomorphic_tangent`].
pub fn levi_on_tangent(j: &StructureField, r: &ScalarField, z: &[f64]) -> Result<DMatrix<f64>> {
    let b = holomorphic_tangent(j, r, z)?;
    let s = levi_matrix(j, r, z);
    Ok(b.transpose() * s * &b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoconvexityReport {
    pub per_point: Vec<f64>,
    pub min_levi: f64,
    pub pass: bool,
}

/// Strict pseudoconvexity of `{r = 0}` at the given hypersurface samples.
pub fn is_strictly_pseudoconvex(
    j: &StructureField,
    r: &ScalarField,
    samples: &[Vec<f64>],
) -> Result<PseudoconvexityReport> {
    let mut per_point = Vec::with_capacity(samples.len());
    for z in samples {
        let rz = r.value(z);
        if rz.abs() > 1e-8 {
            return Err(err!(Precondition, "sample {:?} is off the hypersurface (r = {rz:e})", z));
        }
        per_point.push(levi_min_on_tangent(j, r, z)?);
    }
    let min_levi = per_point.iter().copied().fold(f64::INFINITY, f64::min);
    // the tolerance absorbs rounding in the exactly flat case
    Ok(PseudoconvexityReport { pass: min_levi > 1e-12, min_levi, per_point })
}

/// Result of [`normalize_chart`]: the chart is `z(x) = L (x - p) / lambda`.
#[derive(Debug, Clone)]
pub struct ChartNormalization {
    pub center: Vec<f64>,
    pub linear: DMatrix<f64>,
    pub lambda: f64,
    pub structure: StructureField,
    pub c2_residual: f64,
}

impl ChartNormalization {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = DVector::from_iterator(x.len(), x.iter().zip(&self.center).map(|(a, b)| a - b));
        (&self.linear * d / self.lambda).iter().copied().collect()
    }
}

/// Chart centred at `p` with `J_hat(0) = J_st` and sampled
/// `||J_hat - J_st||_{C^2(unit ball)} <= lambda0`, reached by halving the
/// dilation parameter.
pub fn normalize_chart(j: &StructureField, p: &[f64], lambda0: f64) -> Result<ChartNormalization> {
    normalize_chart_with(j, p, lambda0, C2_GRID, 60)
}

pub fn normalize_chart_with(
    j: &StructureField,
    p: &[f64],
    lambda0: f64,
    grid: usize,
    max_halvings: usize,
) -> Result<ChartNormalization> {
    if !(lambda0 > 0.0) {
        return Err(err!(Parameter, "lambda0 must be positive, got {lambda0}"));
    }
    let dim = j.dim();
    if p.len() != dim {
        return Err(err!(Dimension, "point of length {} for dimension {dim}", p.len()));
    }
    let jp = j.matrix(p);
    let l = conjugator_to_standard(&jp)
        .ok_or_else(|| err!(Degenerate, "J(p) cannot be conjugated to J_st"))?;
    let shift: Vec<f64> = (-(&l * DVector::from_column_slice(p))).iter().copied().collect();
    let base = j.push_affine(&l, &shift)?;
    let target = j_st(dim);
    let mut lambda = 1.0;
    let mut last = f64::INFINITY;
    for _ in 0..=max_halvings {
        let s = vec![lambda; dim];
        let dilated = base.push_diagonal(&s)?;
        let res = c2_distance_to_const(&dilated, &target, 1.0, true, grid);
        last = res;
        if res <= lambda0 {
            return Ok(ChartNormalization {
                center: p.to_vec(),
                linear: l,
                lambda,
                structure: dilated,
                c2_residual: res,
            });
        }
        lambda *= 0.5;
    }
    Err(crate::Error::Convergence { reason: "C^2 bound not reached".into(), residual: last })
}

/// `rho + C rho^2`.
pub fn psh_defining_function(rho: &ScalarField, c: f64) -> ScalarField {
    rho.plus_c_square(c)
}

/// Minimum of the Levi form over unit vectors at each point of a sample
/// set (all of `T_z`, not only the complex tangent).
pub fn min_levi_on_samples(j: &StructureField, u: &ScalarField, samples: &[Vec<f64>]) -> f64 {
    samples
        .iter()
        .map(|z| min_eigenvalue(&levi_matrix(j, u, z)))
        .fold(f64::INFINITY, f64::min)
}
