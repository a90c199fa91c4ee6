//! Cotangent bundle of a coordinate domain: canonical forms, the complete
//! lift of a (1,1) tensor, the Nijenhuis correction that turns the lift of
//! an almost complex structure into one, cotangent maps and conormals.
//!
//! Points of `T^*R^m` are `(x, p)`; tangent vectors are `(ξ, η)` with `ξ`
//! in the base and `η` in the fiber. Matrices act on column vectors.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{err, Result};
use crate::field::{for_each_grid_point, ScalarField, StructureField};
use crate::linalg::{orthogonal_complement, orthonormalize, smallest_principal_angle};
use crate::maps::Diffeo;

/// Step for central differences of parametrizations and Jacobians.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct CotangentPoint {
    pub base: Vec<f64>,
    /// Covector components `p_i`.
    pub fiber: Vec<f64>,
}

impl CotangentPoint {
    pub fn new(base: Vec<f64>, fiber: Vec<f64>) -> Result<Self> {
        if base.len() != fiber.len() || base.is_empty() {
            return Err(err!(Dimension, "base and fiber must have the same positive length"));
        }
        if base.iter().chain(&fiber).any(|x| !x.is_finite()) {
            return Err(err!(Input, "non-finite cotangent point"));
        }
        Ok(Self { base, fiber })
    }

    /// `(x, p)` as one vector of length `2m`.
    pub fn coords(&self) -> Vec<f64> {
        self.base.iter().chain(&self.fiber).copied().collect()
    }

    pub fn from_coords(c: &[f64]) -> Result<Self> {
        if c.len() % 2 != 0 {
            return Err(err!(Dimension, "odd number of cotangent coordinates"));
        }
        let m = c.len() / 2;
        Self::new(c[..m].to_vec(), c[m..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }
}

/// `θ = p_i dx^i` applied to `(ξ, η)`.
pub fn theta(pt: &CotangentPoint, u: &[f64]) -> f64 {
    pt.fiber.iter().zip(u).map(|(p, x)| p * x).sum()
}

/// Matrix `Ω` of `dθ = dp_i ∧ dx^i`: `dθ(U, V) = U^T Ω V`.
pub fn symplectic_matrix(m: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        o[(i, m + i)] = -1.0;
        o[(m + i, i)] = 1.0;
    }
    o
}

/// `(D_v F)` at `z`, the derivative of the matrix field along `v`.
fn directional(f: &StructureField, dfs: &[DMatrix<f64>], v: &DVector<f64>) -> DMatrix<f64> {
    let m = f.dim();
    let mut out = DMatrix::zeros(m, m);
    for (c, d) in dfs.iter().enumerate() {
        if v[c] != 0.0 {
            out += d * v[c];
        }
    }
    out
}

fn nijenhuis_with(f: &DMatrix<f64>, dfs: &[DMatrix<f64>], fld: &StructureField, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    // constant-coefficient X, Y: [X, Y] = 0 and [A, B] = D_A B - D_B A, so
    // N(X, Y) = T(X, Y) - T(Y, X) with T(X, Y) = (D_{FX} F) Y - F (D_X F) Y;
    // the difference form keeps N exactly antisymmetric in floating point
    let half = |a: &DVector<f64>, b: &DVector<f64>| -> DVector<f64> {
        let fa = f * a;
        directional(fld, dfs, &fa) * b - f * (directional(fld, dfs, a) * b)
    };
    half(x, y) - half(y, x)
}

/// `N(X, Y) = [FX, FY] - F[FX, Y] - F[X, FY] + F^2 [X, Y]` at `z` for
/// constant-coefficient fields `X`, `Y`.
pub fn nijenhuis(f: &StructureField, z: &[f64], x: &[f64], y: &[f64]) -> Result<DVector<f64>> {
    let m = f.dim();
    if z.len() != m || x.len() != m || y.len() != m {
        return Err(err!(Dimension, "nijenhuis arguments must have dimension {m}"));
    }
    let fm = f.matrix(z);
    let dfs = f.derivatives(z);
    Ok(nijenhuis_with(&fm, &dfs, f, &DVector::from_column_slice(x), &DVector::from_column_slice(y)))
}

/// `P_ji = p_a (∂_i E^a_j - ∂_j E^a_i)`, the fiber-row base-column block of
/// the complete lift.
fn lift_block(dfs: &[DMatrix<f64>], p: &[f64]) -> DMatrix<f64> {
    let m = p.len();
    DMatrix::from_fn(m, m, |j, i| (0..m).map(|a| p[a] * (dfs[i][(a, j)] - dfs[j][(a, i)])).sum())
}

fn check_point(e: &StructureField, pt: &CotangentPoint) -> Result<()> {
    if pt.dim() != e.dim() {
        return Err(err!(Dimension, "cotangent point of dimension {} for a field of dimension {}", pt.dim(), e.dim()));
    }
    Ok(())
}

/// Complete lift `Ê = [[E, 0], [P, E^T]]`, characterized by
/// `dσ(U, V) = dθ(Ê U, V)` for `σ = p_a E^a_b dx^b`.
pub fn complete_lift(e: &StructureField, pt: &CotangentPoint) -> Result<DMatrix<f64>> {
    check_point(e, pt)?;
    let m = e.dim();
    let em = e.matrix(&pt.base);
    let dfs = e.derivatives(&pt.base);
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(&em);
    out.view_mut((m, m), (m, m)).copy_from(&em.transpose());
    out.view_mut((m, 0), (m, m)).copy_from(&lift_block(&dfs, &pt.fiber));
    Ok(out)
}

/// `γ(NF)`: zero except the fiber-row base-column block
/// `G_ij = p_a N^a(e_j, F e_i)`.
pub fn gamma_nf(f: &StructureField, pt: &CotangentPoint) -> Result<DMatrix<f64>> {
    check_point(f, pt)?;
    let m = f.dim();
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((m, 0), (m, m)).copy_from(&gamma_block(f, &f.matrix(&pt.base), &f.derivatives(&pt.base), &pt.fiber));
    Ok(out)
}

fn gamma_block(f: &StructureField, fm: &DMatrix<f64>, dfs: &[DMatrix<f64>], p: &[f64]) -> DMatrix<f64> {
    let m = f.dim();
    let p = DVector::from_column_slice(p);
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        let fei = fm.column(i).into_owned();
        for j in 0..m {
            let mut ej = DVector::zeros(m);
            ej[j] = 1.0;
            out[(i, j)] = p.dot(&nijenhuis_with(fm, dfs, f, &ej, &fei));
        }
    }
    out
}

/// `Ê + γ(NF)/2` from the 1-jet of `F` at the base point.
fn lift_from_jet(f: &StructureField, fm: &DMatrix<f64>, dfs: &[DMatrix<f64>], p: &[f64]) -> DMatrix<f64> {
    let m = f.dim();
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(fm);
    out.view_mut((m, m), (m, m)).copy_from(&fm.transpose());
    out.view_mut((m, 0), (m, m)).copy_from(&(lift_block(dfs, p) + gamma_block(f, fm, dfs, p) * 0.5));
    out
}

/// Almost complex structure `J̃ = Ĵ + γ(NJ)/2` on `T^*R^m`.
#[derive(Debug, Clone)]
pub struct LiftedStructure {
    pub base: StructureField,
    /// Largest `||J̃^2 + I||_inf` seen during validation.
    pub validation_residual: f64,
}

impl LiftedStructure {
    /// Fiber dimension `m`; the lifted matrices are `2m x 2m`.
    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn matrix(&self, pt: &CotangentPoint) -> Result<DMatrix<f64>> {
        check_point(&self.base, pt)?;
        let f = &self.base;
        Ok(lift_from_jet(f, &f.matrix(&pt.base), &f.derivatives(&pt.base), &pt.fiber))
    }

    /// The lift as a matrix field on `R^{2m}`, derivatives by differences.
    pub fn as_field(&self) -> Result<StructureField> {
        let me = self.clone();
        let m = self.base_dim();
        StructureField::from_fn(2 * m, 1.0, move |c| {
            let pt = CotangentPoint::from_coords(c).expect("coordinates of even length");
            me.matrix(&pt).unwrap_or_else(|_| DMatrix::from_element(2 * m, 2 * m, f64::NAN))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftConfig {
    /// Half-width of the base sample box.
    pub base_radius: f64,
    /// Half-width of the fiber sample box.
    pub fiber_radius: f64,
    /// Grid points per axis when the total grid has at most `max_grid` points.
    pub per_axis: usize,
    pub max_grid: usize,
    /// Seeded random samples used instead of larger grids.
    pub random_samples: usize,
    pub tol: f64,
}

impl Default for LiftConfig {
    fn default() -> Self {
        LiftConfig { base_radius: 0.5, fiber_radius: 1.0, per_axis: 5, max_grid: 1000, random_samples: 400, tol: 1e-9 }
    }
}

/// Validation points in `(x, p)`.
pub fn lift_samples(m: usize, cfg: &LiftConfig) -> Vec<CotangentPoint> {
    let total = crate::math::powi(cfg.per_axis as f64, 2 * m as i32);
    let mut out = Vec::new();
    let scale = |c: &[f64]| -> CotangentPoint {
        let base = c[..m].iter().map(|x| x * cfg.base_radius).collect();
        let fiber = c[m..].iter().map(|x| x * cfg.fiber_radius).collect();
        CotangentPoint { base, fiber }
    };
    if total <= cfg.max_grid as f64 {
        for_each_grid_point(2 * m, cfg.per_axis, 1.0, |c| out.push(scale(c)));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x11f7);
        for _ in 0..cfg.random_samples {
            let c: Vec<f64> = (0..2 * m).map(|_| rng.random_range(-1.0..=1.0)).collect();
            out.push(scale(&c));
        }
    }
    out
}

/// Points `(x, p)` with `x` on the `per_axis^m` grid of the base box and
/// `p` either zero or `fiber_radius` times a coordinate covector. `J̃` is
/// affine in `p`, so these fibers span every fiber direction.
pub fn base_grid_samples(m: usize, cfg: &LiftConfig) -> Vec<CotangentPoint> {
    let mut out = Vec::new();
    for_each_grid_point(m, cfg.per_axis, cfg.base_radius, |x| {
        for k in 0..=m {
            let mut p = vec![0.0; m];
            if k < m {
                p[k] = cfg.fiber_radius;
            }
            out.push(CotangentPoint { base: x.to_vec(), fiber: p });
        }
    });
    out
}

/// Assembles `J̃` and checks `J̃^2 = -I` on [`lift_samples`].
pub fn lift_structure(j: &StructureField, cfg: &LiftConfig) -> Result<LiftedStructure> {
    lift_structure_on(j, &lift_samples(j.dim(), cfg), cfg.tol)
}

/// [`lift_structure`] with explicit validation points.
pub fn lift_structure_on(j: &StructureField, samples: &[CotangentPoint], tol: f64) -> Result<LiftedStructure> {
    let m = j.dim();
    let mut lifted = LiftedStructure { base: j.clone(), validation_residual: 0.0 };
    let id = DMatrix::<f64>::identity(2 * m, 2 * m);
    let mut worst = 0.0f64;
    // samples usually repeat base points across fibers
    let mut jet: Option<(&[f64], DMatrix<f64>, Vec<DMatrix<f64>>)> = None;
    for pt in samples {
        if pt.dim() != m {
            return Err(err!(Dimension, "cotangent point of dimension {} for a field of dimension {m}", pt.dim()));
        }
        if jet.as_ref().map_or(true, |(x, _, _)| *x != pt.base.as_slice()) {
            let jm = j.matrix(&pt.base);
            if (&jm * &jm + DMatrix::<f64>::identity(m, m)).amax() > 1e-10 {
                return Err(err!(Precondition, "J^2 != -I at {:?}", pt.base));
            }
            jet = Some((&pt.base, jm, j.derivatives(&pt.base)));
        }
        let (_, jm, dfs) = jet.as_ref().expect("jet is set");
        let t = lift_from_jet(j, jm, dfs, &pt.fiber);
        let r = (&t * &t + &id).amax();
        worst = worst.max(r);
        if !(r <= tol) {
            return Err(err!(Assembly, "lifted structure fails J^2 = -I by {r:e} at {:?}", pt));
        }
    }
    lifted.validation_residual = worst;
    Ok(lifted)
}

/// `f̃(x, p) = (f(x), Df(x)^{-T} p)`.
pub fn cotangent_map(f: &dyn Diffeo, pt: &CotangentPoint) -> Result<CotangentPoint> {
    if f.dim() != pt.dim() {
        return Err(err!(Dimension, "map and point dimensions differ"));
    }
    let df = f.jacobian(&pt.base);
    let inv = invert(&df, &pt.base)?;
    let p = inv.transpose() * DVector::from_column_slice(&pt.fiber);
    CotangentPoint::new(f.map(&pt.base), p.iter().copied().collect())
}

fn invert(df: &DMatrix<f64>, at: &[f64]) -> Result<DMatrix<f64>> {
    let svd = df.clone().svd(false, false);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(err!(Degenerate, "df is singular at {:?}", at));
    }
    df.clone().try_inverse().ok_or_else(|| err!(Degenerate, "df is singular at {:?}", at))
}

/// Jacobian of [`cotangent_map`] in `(x, p)`. The `∂p'/∂x` block uses
/// central differences of `Df`.
pub fn cotangent_differential(f: &dyn Diffeo, pt: &CotangentPoint) -> Result<DMatrix<f64>> {
    let m = pt.dim();
    let df = f.jacobian(&pt.base);
    let inv_t = invert(&df, &pt.base)?.transpose();
    let p = DVector::from_column_slice(&pt.fiber);
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(&df);
    out.view_mut((m, m), (m, m)).copy_from(&inv_t);
    // d(A^{-T}) = -A^{-T} dA^T A^{-T}
    for c in 0..m {
        let mut x = pt.base.clone();
        x[c] += FD_STEP;
        let dp = f.jacobian(&x);
        x[c] -= 2.0 * FD_STEP;
        let dm = f.jacobian(&x);
        let da = (dp - dm) / (2.0 * FD_STEP);
        let col = -(&inv_t * da.transpose() * &inv_t * &p);
        out.view_mut((m, c), (m, 1)).copy_from(&col);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormPullback {
    /// `max |θ(f̃(pt))(Df̃ U) - θ(pt)(U)|` over unit coordinate vectors.
    pub theta: f64,
    /// `||Df̃^T Ω Df̃ - Ω||_inf`.
    pub dtheta: f64,
}

/// Residuals of `f̃^* θ = θ` and `f̃^* dθ = dθ` at `pt`.
pub fn form_pullback(f: &dyn Diffeo, pt: &CotangentPoint) -> Result<FormPullback> {
    let m = pt.dim();
    let image = cotangent_map(f, pt)?;
    let d = cotangent_differential(f, pt)?;
    let mut th = 0.0f64;
    for k in 0..2 * m {
        let pushed: Vec<f64> = d.column(k).iter().copied().collect();
        let own = if k < m { pt.fiber[k] } else { 0.0 };
        th = th.max((theta(&image, &pushed) - own).abs());
    }
    let o = symplectic_matrix(m);
    let dt = (d.transpose() * &o * &d - &o).amax();
    Ok(FormPullback { theta: th, dtheta: dt })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftInvarianceReport {
    /// `max ||df J - J' df||` over the base points.
    pub precondition_residual: f64,
    /// `max ||Df̃ J̃ - J̃' Df̃||_inf`.
    pub max_residual: f64,
    pub samples: usize,
}

/// Checks that `f̃` intertwines the lifts of `J` and `J'`.
pub fn lift_invariance_check(
    f: &dyn Diffeo,
    j: &StructureField,
    j2: &StructureField,
    points: &[CotangentPoint],
) -> Result<LiftInvarianceReport> {
    let a = LiftedStructure { base: j.clone(), validation_residual: 0.0 };
    let b = LiftedStructure { base: j2.clone(), validation_residual: 0.0 };
    let (mut pre, mut worst) = (0.0f64, 0.0f64);
    for pt in points {
        let df = f.jacobian(&pt.base);
        let fx = f.map(&pt.base);
        let r = (&df * j.matrix(&pt.base) - j2.matrix(&fx) * &df).amax();
        pre = pre.max(r);
        if r > 1e-8 * (1.0 + df.amax()) {
            return Err(err!(Precondition, "f_* J != J' at {:?} (residual {r:e})", pt.base));
        }
        let d = cotangent_differential(f, pt)?;
        let image = cotangent_map(f, pt)?;
        worst = worst.max((&d * a.matrix(pt)? - b.matrix(&image)? * &d).amax());
    }
    Ok(LiftInvarianceReport { precondition_residual: pre, max_residual: worst, samples: points.len() })
}

/// A point of the conormal bundle of `{ρ = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConormalSample {
    pub point: CotangentPoint,
    /// Real coefficient `c` of `φ = c ∂_J ρ`.
    pub coefficient: f64,
}

/// Conormal covector `Re(c ∂_J ρ(z)) = (c/2) dρ(z)` at a point `z` of the
/// hypersurface. Only real `c` keep `Re φ` zero on the real tangent space.
pub fn conormal_bundle(rho: &ScalarField, j: &StructureField, z: &[f64], c: f64) -> Result<ConormalSample> {
    if rho.dim() != z.len() || j.dim() != z.len() {
        return Err(err!(Dimension, "conormal data dimensions differ"));
    }
    let v = rho.value(z);
    if !(v.abs() <= 1e-8) {
        return Err(err!(Domain, "ρ = {v:e} at {:?}: not on the hypersurface", z));
    }
    if !(c != 0.0 && c.is_finite()) {
        return Err(err!(Parameter, "the coefficient must be nonzero (zero section excluded)"));
    }
    let g = rho.gradient(z);
    if g.norm() < 1e-12 {
        return Err(err!(Degenerate, "dρ vanishes at {:?}", z));
    }
    let fiber = g.iter().map(|x| 0.5 * c * x).collect();
    Ok(ConormalSample { point: CotangentPoint::new(z.to_vec(), fiber)?, coefficient: c })
}

/// Newton projection onto `{ρ = 0}` along the gradient.
pub fn project_to_hypersurface(rho: &ScalarField, z: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = z.to_vec();
    for _ in 0..100 {
        let v = rho.value(&x);
        if v.abs() <= tol {
            return Ok(x);
        }
        let g = rho.gradient(&x);
        let n2 = g.norm_squared();
        if n2 < 1e-24 {
            return Err(err!(Degenerate, "dρ vanishes at {:?}", x));
        }
        for (xi, gi) in x.iter_mut().zip(g.iter()) {
            *xi -= v * gi / n2;
        }
    }
    Err(err!(Degenerate, "projection onto ρ = 0 did not converge from {:?}", z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealitySample {
    pub point: Vec<f64>,
    /// Smallest principal angle between `T` and `J̃ T`.
    pub angle: f64,
    /// Number of principal angles below the tolerance.
    pub intersection_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealityReport {
    pub samples: Vec<RealitySample>,
    pub min_angle: f64,
    pub pass: bool,
}

/// Tangent basis of the conormal bundle at `(z, c)`: differences of the
/// parametrization `(s, c) -> conormal(π(z + Σ s_k u_k), c)` over a
/// basis `u_k` of `T_zΓ`, step [`FD_STEP`].
pub fn conormal_tangent(rho: &ScalarField, j: &StructureField, z: &[f64], c: f64) -> Result<DMatrix<f64>> {
    let m = z.len();
    let g = rho.gradient(z);
    let tangent = orthogonal_complement(&DMatrix::from_column_slice(m, 1, g.as_slice()));
    let chart = |s: &[f64], c: f64| -> Result<Vec<f64>> {
        let mut x = z.to_vec();
        for (k, sk) in s.iter().enumerate() {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += sk * tangent[(i, k)];
            }
        }
        let on = project_to_hypersurface(rho, &x, 1e-15)?;
        Ok(conormal_bundle(rho, j, &on, c)?.point.coords())
    };
    let mut cols = Vec::with_capacity(m);
    let zero = vec![0.0; m - 1];
    for k in 0..m - 1 {
        let mut s = zero.clone();
        s[k] = FD_STEP;
        let a = chart(&s, c)?;
        s[k] = -FD_STEP;
        let b = chart(&s, c)?;
        cols.push(DVector::from_iterator(2 * m, a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * FD_STEP))));
    }
    let a = chart(&zero, c + FD_STEP)?;
    let b = chart(&zero, c - FD_STEP)?;
    cols.push(DVector::from_iterator(2 * m, a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * FD_STEP))));
    Ok(DMatrix::from_columns(&cols))
}

/// Principal angle threshold separating totally real from degenerate.
pub const REALITY_ANGLE: f64 = 1e-3;

/// Tests `T ∩ J̃ T = 0` on the conormal bundle of `{ρ = 0}` at the given
/// hypersurface points and coefficients.
pub fn total_reality_test(
    rho: &ScalarField,
    lifted: &LiftedStructure,
    samples: &[(Vec<f64>, f64)],
    angle_tol: f64,
) -> Result<RealityReport> {
    let mut out = Vec::with_capacity(samples.len());
    for (z, c) in samples {
        let t = conormal_tangent(rho, &lifted.base, z, *c)?;
        let (q, ratio) = orthonormalize(&t);
        if ratio < 1e-8 {
            return Err(err!(Conditioning, "conormal tangent basis is degenerate at {:?} (ratio {ratio:e})", z));
        }
        let pt = conormal_bundle(rho, &lifted.base, z, *c)?.point;
        let jt = lifted.matrix(&pt)? * &q;
        let (q2, _) = orthonormalize(&jt);
        let sv = (q.transpose() * &q2).svd(false, false).singular_values;
        let intersection_dim = sv.iter().filter(|&&s| crate::math::acos(s.min(1.0)) <= angle_tol).count();
        out.push(RealitySample { point: z.clone(), angle: smallest_principal_angle(&q, &q2), intersection_dim });
    }
    let min_angle = out.iter().map(|s| s.angle).fold(f64::INFINITY, f64::min);
    Ok(RealityReport { pass: !out.is_empty() && min_angle > angle_tol, samples: out, min_angle })
}
