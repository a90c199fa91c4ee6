//! Scalar and matrix fields on coordinate boxes.
//!
//! Polynomial fields carry exact derivative polynomials. Black-box fields
//! fall back to central differences with step `1e-5 * scale`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use nalgebra::{DMatrix, DVector};

use crate::error::{err, Result};
use crate::poly::{FlatPolys, Poly, PolyMatrix};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

/// Relative finite-difference step for black-box fields.
pub const FD_STEP: f64 = 1e-5;

/// The standard structure on `R^{2n}` in interleaved coordinates
/// `(x1, y1, ..., xn, yn)`: `J d/dx = d/dy`, `J d/dy = -d/dx`.
pub fn j_st(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for k in 0..dim / 2 {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

fn check_even(dim: usize) -> Result<()> {
    if dim == 0 || dim % 2 != 0 {
        return Err(err!(Dimension, "dimension {dim} is not a positive even integer"));
    }
    Ok(())
}

#[derive(Clone)]
enum ScalarRepr {
    Poly { p: Poly, value: FlatPolys, grad: FlatPolys, hess: FlatPolys },
    BlackBox { f: ScalarFn, scale: f64 },
    Oracle { f: ScalarFn, grad: VectorFn, hess: MatrixFn },
}

/// Real-valued field with value, gradient and Hessian oracles.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    repr: ScalarRepr,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            ScalarRepr::Poly { p, .. } => f.debug_struct("ScalarField").field("poly", p).finish(),
            ScalarRepr::BlackBox { scale, .. } => {
                f.debug_struct("ScalarField").field("dim", &self.dim).field("blackbox_scale", scale).finish()
            }
            ScalarRepr::Oracle { .. } => f.debug_struct("ScalarField").field("dim", &self.dim).field("oracle", &true).finish(),
        }
    }
}

impl ScalarField {
    pub fn from_poly(p: Poly) -> Self {
        let dim = p.nvars();
        let grad: Vec<Poly> = (0..dim).map(|i| p.deriv(i)).collect();
        let hess: Vec<Poly> = (0..dim * dim).map(|k| grad[k / dim].deriv(k % dim)).collect();
        let (value, grad, hess) =
            (FlatPolys::new(core::slice::from_ref(&p)), FlatPolys::new(&grad), FlatPolys::new(&hess));
        Self { dim, repr: ScalarRepr::Poly { p, value, grad, hess } }
    }

    /// Black-box field; derivatives use central differences with step
    /// `1e-5 * scale`.
    pub fn from_fn(dim: usize, scale: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, repr: ScalarRepr::BlackBox { f: Arc::new(f), scale } }
    }

    /// Field with caller-supplied exact gradient and Hessian.
    pub fn from_oracles(
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, repr: ScalarRepr::Oracle { f: Arc::new(f), grad: Arc::new(grad), hess: Arc::new(hess) } }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        match &self.repr {
            ScalarRepr::Poly { p, .. } => Some(p),
            _ => None,
        }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        match &self.repr {
            ScalarRepr::Poly { value, .. } => {
                let mut v = [0.0];
                value.eval_into(z, &mut v);
                v[0]
            }
            ScalarRepr::BlackBox { f, .. } => f(z),
            ScalarRepr::Oracle { f, .. } => f(z),
        }
    }

    pub fn gradient(&self, z: &[f64]) -> DVector<f64> {
        match &self.repr {
            ScalarRepr::Poly { grad, .. } => {
                let mut g = DVector::zeros(self.dim);
                grad.eval_into(z, g.as_mut_slice());
                g
            }
            ScalarRepr::BlackBox { f, scale } => {
                let h = FD_STEP * scale;
                let mut x = z.to_vec();
                DVector::from_fn(self.dim, |i, _| {
                    let x0 = x[i];
                    x[i] = x0 + h;
                    let fp = f(&x);
                    x[i] = x0 - h;
                    let fm = f(&x);
                    x[i] = x0;
                    (fp - fm) / (2.0 * h)
                })
            }
            ScalarRepr::Oracle { grad, .. } => grad(z),
        }
    }

    pub fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        match &self.repr {
            ScalarRepr::Poly { hess, .. } => {
                let mut h = vec![0.0; n * n];
                hess.eval_into(z, &mut h);
                DMatrix::from_row_slice(n, n, &h)
            }
            ScalarRepr::Oracle { hess, .. } => hess(z),
            ScalarRepr::BlackBox { f, scale } => {
                let h = FD_STEP * scale * 10.0;
                let mut x = z.to_vec();
                let f0 = f(&x);
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    let xi = x[i];
                    x[i] = xi + h;
                    let fp = f(&x);
                    x[i] = xi - h;
                    let fm = f(&x);
                    x[i] = xi;
                    m[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
                    for j in 0..i {
                        let xj = x[j];
                        let mut s = 0.0;
                        for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                            x[i] = xi + si * h;
                            x[j] = xj + sj * h;
                            s += si * sj * f(&x);
                        }
                        x[i] = xi;
                        x[j] = xj;
                        let v = s / (4.0 * h * h);
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                    }
                }
                m
            }
        }
    }

    /// `rho + C rho^2`, exact for polynomial input.
    pub fn plus_c_square(&self, c: f64) -> Self {
        match &self.repr {
            ScalarRepr::Poly { p, .. } => Self::from_poly(p.add(&p.mul(p).scale(c))),
            ScalarRepr::BlackBox { f, scale } => {
                let f = f.clone();
                Self::from_fn(self.dim, *scale, move |z| {
                    let r = f(z);
                    r + c * r * r
                })
            }
            ScalarRepr::Oracle { f, grad, hess } => {
                let (f1, f2, f3) = (f.clone(), f.clone(), f.clone());
                let (g2, g3, h3) = (grad.clone(), grad.clone(), hess.clone());
                Self::from_oracles(
                    self.dim,
                    move |z| {
                        let r = f1(z);
                        r + c * r * r
                    },
                    move |z| g2(z) * (1.0 + 2.0 * c * f2(z)),
                    move |z| {
                        let g = g3(z);
                        h3(z) * (1.0 + 2.0 * c * f3(z)) + &g * g.transpose() * (2.0 * c)
                    },
                )
            }
        }
    }

    /// `w -> s * rho(A w + b)`; polynomials stay polynomial, derivative
    /// oracles follow the chain rule.
    pub fn compose_affine(&self, a: &DMatrix<f64>, b: &[f64], s: f64) -> Result<Self> {
        let n = self.dim;
        if a.nrows() != n || b.len() != n {
            return Err(err!(Dimension, "affine substitution must map R^{} into R^{n}", a.ncols()));
        }
        let m = a.ncols();
        let at = |w: &[f64], a: &DMatrix<f64>, b: &[f64]| -> Vec<f64> {
            (a * DVector::from_column_slice(w)).iter().zip(b).map(|(x, y)| x + y).collect()
        };
        Ok(match &self.repr {
            ScalarRepr::Poly { p, .. } => Self::from_poly(p.compose_affine(a, b).scale(s)),
            ScalarRepr::BlackBox { f, scale } => {
                let (f, a, b) = (f.clone(), a.clone(), b.to_vec());
                let stretch = a.amax().max(1e-12);
                Self::from_fn(m, scale / stretch, move |w| s * f(&at(w, &a, &b)))
            }
            ScalarRepr::Oracle { f, grad, hess } => {
                let (f, g, h) = (f.clone(), grad.clone(), hess.clone());
                let (a1, b1, a2, b2, a3, b3) = (a.clone(), b.to_vec(), a.clone(), b.to_vec(), a.clone(), b.to_vec());
                Self::from_oracles(
                    m,
                    move |w| s * f(&at(w, &a1, &b1)),
                    move |w| a2.transpose() * g(&at(w, &a2, &b2)) * s,
                    move |w| a3.transpose() * h(&at(w, &a3, &b3)) * &a3 * s,
                )
            }
        })
    }

    /// `s * rho` for a constant `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match &self.repr {
            ScalarRepr::Poly { p, .. } => Self::from_poly(p.scale(s)),
            ScalarRepr::BlackBox { f, scale } => {
                let f = f.clone();
                Self::from_fn(self.dim, *scale, move |z| s * f(z))
            }
            ScalarRepr::Oracle { f, grad, hess } => {
                let (f, g, h) = (f.clone(), grad.clone(), hess.clone());
                Self::from_oracles(self.dim, move |z| s * f(z), move |z| g(z) * s, move |z| h(z) * s)
            }
        }
    }
}

#[derive(Clone)]
enum MatrixRepr {
    Poly { m: PolyMatrix, flat: FlatPolys, dflat: Vec<FlatPolys> },
    BlackBox { f: MatrixFn, scale: f64 },
}

fn flat_matrix(f: &FlatPolys, dim: usize, z: &[f64]) -> DMatrix<f64> {
    let mut v = vec![0.0; dim * dim];
    f.eval_into(z, &mut v);
    // entries are row-major
    DMatrix::from_row_slice(dim, dim, &v)
}

/// Matrix-valued field `z -> J(z)` on `R^{2n}`.
#[derive(Clone)]
pub struct StructureField {
    dim: usize,
    repr: MatrixRepr,
}

impl fmt::Debug for StructureField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            MatrixRepr::Poly { m, .. } => f.debug_struct("StructureField").field("poly", m).finish(),
            MatrixRepr::BlackBox { scale, .. } => {
                f.debug_struct("StructureField").field("dim", &self.dim).field("blackbox_scale", scale).finish()
            }
        }
    }
}

impl StructureField {
    pub fn from_poly(m: PolyMatrix) -> Result<Self> {
        let dim = m.size();
        check_even(dim)?;
        if m.nvars() != dim {
            return Err(err!(Dimension, "matrix of size {dim} over {} variables", m.nvars()));
        }
        let dm: Vec<PolyMatrix> = (0..dim).map(|c| m.deriv(c)).collect();
        let flat = FlatPolys::new(m.entries());
        let dflat = dm.iter().map(|d| FlatPolys::new(d.entries())).collect();
        Ok(Self { dim, repr: MatrixRepr::Poly { m, flat, dflat } })
    }

    pub fn from_fn(
        dim: usize,
        scale: f64,
        f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        check_even(dim)?;
        Ok(Self { dim, repr: MatrixRepr::BlackBox { f: Arc::new(f), scale } })
    }

    pub fn standard(dim: usize) -> Result<Self> {
        check_even(dim)?;
        Self::from_poly(PolyMatrix::constant(&j_st(dim), dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_poly(&self) -> Option<&PolyMatrix> {
        match &self.repr {
            MatrixRepr::Poly { m, .. } => Some(m),
            _ => None,
        }
    }

    pub fn matrix(&self, z: &[f64]) -> DMatrix<f64> {
        match &self.repr {
            MatrixRepr::Poly { flat, .. } => flat_matrix(flat, self.dim, z),
            MatrixRepr::BlackBox { f, .. } => f(z),
        }
    }

    /// `dJ/dx^c` at `z`.
    pub fn derivative(&self, z: &[f64], c: usize) -> DMatrix<f64> {
        match &self.repr {
            MatrixRepr::Poly { dflat, .. } => flat_matrix(&dflat[c], self.dim, z),
            MatrixRepr::BlackBox { f, scale } => {
                let h = FD_STEP * scale;
                let mut x = z.to_vec();
                x[c] += h;
                let fp = f(&x);
                x[c] -= 2.0 * h;
                let fm = f(&x);
                (fp - fm) / (2.0 * h)
            }
        }
    }

    pub fn derivatives(&self, z: &[f64]) -> Vec<DMatrix<f64>> {
        (0..self.dim).map(|c| self.derivative(z, c)).collect()
    }

    /// Second derivative `d^2 J / dx^c dx^d` by central differences of the
    /// first-derivative oracle.
    pub fn second_derivative(&self, z: &[f64], c: usize, d: usize, h: f64) -> DMatrix<f64> {
        let mut x = z.to_vec();
        x[d] += h;
        let p = self.derivative(&x, c);
        x[d] -= 2.0 * h;
        let m = self.derivative(&x, c);
        (p - m) / (2.0 * h)
    }

    /// Push-forward under the affine map `x -> A x + b`:
    /// `J'(w) = A J(A^{-1}(w - b)) A^{-1}`.
    pub fn push_affine(&self, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        let ainv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| err!(Degenerate, "affine map is singular"))?;
        let shift: Vec<f64> = (-(&ainv * DVector::from_column_slice(b))).iter().copied().collect();
        match &self.repr {
            MatrixRepr::Poly { m, .. } => {
                let composed = m.map(|p| p.compose_affine(&ainv, &shift));
                Self::from_poly(composed.conjugate_const(a, &ainv))
            }
            MatrixRepr::BlackBox { f, scale } => {
                let f = f.clone();
                let a = a.clone();
                let dim = self.dim;
                let ainv2 = ainv.clone();
                Self::from_fn(dim, *scale, move |w| {
                    let x = &ainv2 * DVector::from_column_slice(w) + DVector::from_column_slice(&shift);
                    &a * f(x.as_slice()) * &ainv2
                })
            }
        }
    }

    /// Componentwise rescaling `x_c -> s_c x_c` of the argument combined with
    /// conjugation by `diag(1/s)`: the push-forward under `x -> diag(1/s) x`.
    pub fn push_diagonal(&self, s: &[f64]) -> Result<Self> {
        let dim = self.dim;
        let inv: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
        match &self.repr {
            MatrixRepr::Poly { m, .. } => {
                let mut entries = Vec::with_capacity(dim * dim);
                for r in 0..dim {
                    for c in 0..dim {
                        let ratio = inv[r] / inv[c];
                        let p = m.get(r, c).map_coeffs(|e| {
                            let mut f = ratio;
                            for (k, &ek) in e.iter().enumerate() {
                                f *= crate::math::powi(s[k], ek as i32);
                            }
                            f
                        });
                        entries.push(p);
                    }
                }
                Self::from_poly(PolyMatrix::new(dim, entries))
            }
            MatrixRepr::BlackBox { .. } => {
                let a = DMatrix::from_diagonal(&DVector::from_vec(inv));
                self.push_affine(&a, &vec![0.0; dim])
            }
        }
    }
}

/// Axis-aligned box, optionally cut down to `{rho < 0}`.
#[derive(Debug, Clone)]
pub struct BoxDomain {
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub defining: Option<ScalarField>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, defining: Option<ScalarField>) -> Result<Self> {
        let dim = lo.len();
        check_even(dim)?;
        if hi.len() != dim {
            return Err(err!(Dimension, "bounds of different lengths"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(err!(Parameter, "box bounds must satisfy lo < hi"));
        }
        if let Some(r) = &defining {
            if r.dim() != dim {
                return Err(err!(Dimension, "defining function dimension {} != {dim}", r.dim()));
            }
        }
        Ok(Self { dim, lo, hi, defining })
    }

    /// Symmetric box `[-h, h]^dim`.
    pub fn cube(dim: usize, h: f64, defining: Option<ScalarField>) -> Result<Self> {
        Self::new(vec![-h; dim], vec![h; dim], defining)
    }

    pub fn in_box(&self, z: &[f64]) -> bool {
        z.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    pub fn rho(&self, z: &[f64]) -> f64 {
        self.defining.as_ref().map(|r| r.value(z)).unwrap_or(-1.0)
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.in_box(z) && self.rho(z) < 0.0
    }

    /// Largest distance from `q` to a box corner: a bound for `sup |z - q|`.
    pub fn diameter_from(&self, q: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            let d = (q[i] - self.lo[i]).abs().max((self.hi[i] - q[i]).abs());
            s += d * d;
        }
        crate::math::sqrt(s)
    }
}

/// Tangent vector with base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Vec<f64>,
    pub v: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if base.len() != v.len() {
            return Err(err!(Dimension, "base and vector lengths differ"));
        }
        if base.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(err!(Input, "non-finite tangent vector"));
        }
        Ok(Self { base, v })
    }
}

/// Sampled C^2 distance `max(|F - G|, |DF - DG|, |D^2F - D^2G|)` (entrywise
/// sup) between a structure field and a constant matrix over the points of
/// a `17^dim` tensor grid on `[-r, r]^dim` that lie in the ball of radius `r`
/// (or the whole cube when `ball` is false).
pub fn c2_distance_to_const(
    j: &StructureField,
    target: &DMatrix<f64>,
    r: f64,
    ball: bool,
    per_axis: usize,
) -> f64 {
    let dim = j.dim();
    let h = 1e-4 * r.max(1e-3);
    let mut worst: f64 = 0.0;
    for_each_grid_point(dim, per_axis, r, |z| {
        if ball && z.iter().map(|x| x * x).sum::<f64>() > r * r * (1.0 + 1e-12) {
            return;
        }
        let m = j.matrix(z) - target;
        worst = worst.max(m.amax());
        for c in 0..dim {
            worst = worst.max(j.derivative(z, c).amax());
            for d in 0..=c {
                worst = worst.max(j.second_derivative(z, c, d, h).amax());
            }
        }
    });
    worst
}

/// Sampled C^2 distance between two scalar fields on a tensor grid over
/// `[-r, r]^dim`.
pub fn c2_distance_scalar(a: &ScalarField, b: &ScalarField, r: f64, per_axis: usize) -> f64 {
    let dim = a.dim();
    let mut worst: f64 = 0.0;
    for_each_grid_point(dim, per_axis, r, |z| {
        worst = worst.max((a.value(z) - b.value(z)).abs());
        worst = worst.max((a.gradient(z) - b.gradient(z)).amax());
        worst = worst.max((a.hessian(z) - b.hessian(z)).amax());
    });
    worst
}

/// Calls `f` on every point of the `per_axis^dim` tensor grid on `[-r, r]^dim`.
pub fn for_each_grid_point(dim: usize, per_axis: usize, r: f64, mut f: impl FnMut(&[f64])) {
    let nodes: Vec<f64> = (0..per_axis)
        .map(|k| if per_axis == 1 { 0.0 } else { -r + 2.0 * r * k as f64 / (per_axis - 1) as f64 })
        .collect();
    let mut idx = vec![0usize; dim];
    let mut z = vec![0.0; dim];
    loop {
        for (i, &k) in idx.iter().enumerate() {
            z[i] = nodes[k];
        }
        f(&z);
        let mut a = 0;
        loop {
            if a == dim {
                return;
            }
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Grid resolution used for sampled C^2 norms.
pub const C2_GRID: usize = 17;
