//! Dilations of structures and defining functions on `C^2`, the affine
//! normalization at a boundary point and the scaling sequence converging to
//! the model domain `{2 Re z2 + 2 Re K(z1, 0) + H(z1, 0) < 0}`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{err, Result};
use crate::field::{c2_distance_to_const, for_each_grid_point, j_st, ScalarField, StructureField};
use crate::linalg::null_space;
use crate::maps::AffineMap;
use crate::math::{powi, sqrt};
use crate::poly::{ComplexPoly, Poly, PolyMatrix};
use crate::structure::is_strictly_pseudoconvex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DilationKind {
    /// `(z1, z2) -> (δ^{-1/2} z1, δ^{-1} z2)` on `C^2`.
    Nonisotropic,
    /// `z -> z / ε`.
    Isotropic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationSpec {
    pub kind: DilationKind,
    pub delta: f64,
}

/// `δ^{k/2}`, exact when `k` is even.
fn half_power(delta: f64, k: i32) -> f64 {
    let p = powi(delta, k.div_euclid(2));
    if k.rem_euclid(2) == 1 {
        p * sqrt(delta)
    } else {
        p
    }
}

impl DilationSpec {
    pub fn new(kind: DilationKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(err!(Parameter, "dilation parameter must be positive, got {delta}"));
        }
        Ok(Self { kind, delta })
    }

    pub fn nonisotropic(delta: f64) -> Result<Self> {
        Self::new(DilationKind::Nonisotropic, delta)
    }

    pub fn isotropic(eps: f64) -> Result<Self> {
        Self::new(DilationKind::Isotropic, eps)
    }

    /// Twice the weight of each real coordinate: `Λ^{-1}` multiplies
    /// coordinate `c` by `δ^{w_c / 2}`.
    fn weights(&self, dim: usize) -> Result<Vec<i32>> {
        match self.kind {
            DilationKind::Nonisotropic if dim == 4 => Ok(vec![1, 1, 2, 2]),
            DilationKind::Nonisotropic => Err(err!(Dimension, "non-isotropic dilations act on C^2")),
            DilationKind::Isotropic if dim % 2 == 0 && dim > 0 => Ok(vec![2; dim]),
            DilationKind::Isotropic => Err(err!(Dimension, "dimension must be even and positive")),
        }
    }

    /// `Λ(z)`.
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        let w = self.weights(z.len())?;
        Ok(z.iter().zip(&w).map(|(x, &k)| x / half_power(self.delta, k)).collect())
    }

    /// `Λ^{-1}(w)`.
    pub fn invert(&self, w: &[f64]) -> Result<Vec<f64>> {
        let wt = self.weights(w.len())?;
        Ok(w.iter().zip(&wt).map(|(x, &k)| x * half_power(self.delta, k)).collect())
    }

    /// `Λ_δ ∘ Λ_δ' = Λ_{δδ'}`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.kind != other.kind {
            return Err(err!(Parameter, "cannot compose dilations of different kinds"));
        }
        Self::new(self.kind, self.delta * other.delta)
    }
}

/// Push-forward `(Λ)_* J`: `J_δ(w) = Λ J(Λ^{-1} w) Λ^{-1}`. Blocks `(2,1)`
/// and `(1,2)` pick up `δ^{-1/2}` and `δ^{1/2}`.
pub fn dilate_structure(j: &StructureField, spec: &DilationSpec) -> Result<StructureField> {
    let dim = j.dim();
    let w = spec.weights(dim)?;
    match j.as_poly() {
        Some(m) => {
            let mut entries = Vec::with_capacity(dim * dim);
            for r in 0..dim {
                for c in 0..dim {
                    let p = m.get(r, c).map_coeffs(|e| {
                        let k: i32 = e.iter().zip(&w).map(|(&ei, &wi)| ei as i32 * wi).sum::<i32>() - w[r] + w[c];
                        half_power(spec.delta, k)
                    });
                    entries.push(p);
                }
            }
            StructureField::from_poly(PolyMatrix::new(dim, entries))
        }
        None => {
            let s: Vec<f64> = w.iter().map(|&k| half_power(spec.delta, k)).collect();
            j.push_diagonal(&s)
        }
    }
}

/// `ρ_δ = δ^{-1} ρ ∘ Λ^{-1}`.
pub fn dilate_defining(rho: &ScalarField, spec: &DilationSpec) -> Result<ScalarField> {
    let dim = rho.dim();
    let w = spec.weights(dim)?;
    match rho.as_poly() {
        Some(p) => Ok(ScalarField::from_poly(p.map_coeffs(|e| {
            let k: i32 = e.iter().zip(&w).map(|(&ei, &wi)| ei as i32 * wi).sum::<i32>() - 2;
            half_power(spec.delta, k)
        }))),
        None => {
            let s = DVector::from_iterator(dim, w.iter().map(|&k| half_power(spec.delta, k)));
            rho.compose_affine(&DMatrix::from_diagonal(&s), &vec![0.0; dim], 1.0 / spec.delta)
        }
    }
}

/// `Σ = {2 Re z2 + 2 Re(k z1^2) + h |z1|^2 < 0}`.
#[derive(Debug, Clone)]
pub struct ModelDomain {
    /// `K(z1, 0) = k z1^2`.
    pub k: Complex64,
    /// `H(z1, 0) = h |z1|^2`.
    pub h: f64,
    pub defining: ScalarField,
}

impl ModelDomain {
    pub fn new(k: Complex64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(err!(ModelDegeneracy, "H(z1, 0) = {h} |z1|^2 is not positive"));
        }
        let x2 = Poly::var(4, 2);
        let z1sq = ComplexPoly::z(2, 0).pow(2);
        // 2 Re(k z1^2) = 2 (Re k Re z1^2 - Im k Im z1^2)
        let kz = z1sq.re.scale(2.0 * k.re).sub(&z1sq.im.scale(2.0 * k.im));
        let p = x2.scale(2.0).add(&kz).add(&ComplexPoly::abs2_z(2, 0).scale(h));
        Ok(Self { k, h, defining: ScalarField::from_poly(p) })
    }
}

/// Real `4 x 4` matrix of a complex `2 x 2` matrix.
pub fn complex_to_real(c: &[[Complex64; 2]; 2]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(4, 4);
    for r in 0..2 {
        for s in 0..2 {
            let z = c[r][s];
            a[(2 * r, 2 * s)] = z.re;
            a[(2 * r, 2 * s + 1)] = -z.im;
            a[(2 * r + 1, 2 * s)] = z.im;
            a[(2 * r + 1, 2 * s + 1)] = z.re;
        }
    }
    a
}

/// Complex coefficients `(∂ρ/∂z_j)` from a real gradient.
fn dz(g: &DVector<f64>) -> [Complex64; 2] {
    [Complex64::new(0.5 * g[0], -0.5 * g[1]), Complex64::new(0.5 * g[2], -0.5 * g[3])]
}

/// Real-linear `L` with `L K L^{-1} = J_st`, closest to the identity in the
/// Frobenius norm.
pub fn standardizing_map(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    let js = j_st(n);
    let id = DMatrix::<f64>::identity(n, n);
    if *k == js {
        return Ok(id);
    }
    // vec(L K - J L) = (K^T ⊗ I - I ⊗ J) vec(L), column-major vec
    let op = k.transpose().kronecker(&id) - id.kronecker(&js);
    let basis = null_space(&op, 1e-10);
    if basis.ncols() == 0 {
        return Err(err!(Degenerate, "J(0) is not conjugate to J_st"));
    }
    let vid = DVector::from_column_slice(id.as_slice());
    let v = &basis * (basis.transpose() * vid);
    let l = DMatrix::from_column_slice(n, n, v.as_slice());
    let inv = l.clone().try_inverse().ok_or_else(|| err!(Degenerate, "closest standardizing map is singular"))?;
    if (&l * k * &inv - &js).amax() > 1e-10 {
        return Err(err!(Degenerate, "standardizing map does not conjugate J(0) to J_st"));
    }
    Ok(l)
}

/// Affine chart `T = M ∘ L ∘ α^t` at a boundary point `t`.
#[derive(Debug, Clone)]
pub struct NormalizationStep {
    pub t: Vec<f64>,
    /// `κ = 2 / |∇ρ(t)|`, applied to `ρ` before `α^t`.
    pub kappa: f64,
    /// Linear part of `α^t(z) = A (z - t)`.
    pub alpha: DMatrix<f64>,
    pub l: DMatrix<f64>,
    /// Complex-linear, as a real matrix.
    pub m: DMatrix<f64>,
    pub transform: AffineMap,
    /// `T_* J`.
    pub structure: StructureField,
    /// `κ ρ ∘ T^{-1}`.
    pub defining: ScalarField,
}

impl NormalizationStep {
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        use crate::maps::Diffeo;
        self.transform.map(z)
    }
}

/// Normalizes at a boundary point: `T(t) = 0`, `J_k(0) = J_st` and
/// `ρ_k = 2 Re z2 + O(|z|^2)`.
pub fn pinchuk_normalize(rho: &ScalarField, j: &StructureField, t: &[f64]) -> Result<NormalizationStep> {
    if rho.dim() != 4 || j.dim() != 4 || t.len() != 4 {
        return Err(err!(Dimension, "normalization works on C^2"));
    }
    let v = rho.value(t);
    if !(v.abs() <= 1e-8) {
        return Err(err!(Domain, "ρ = {v:e} at {:?}: not a boundary point", t));
    }
    let g = rho.gradient(t);
    let gn = g.norm();
    if gn < 1e-12 {
        return Err(err!(Degenerate, "dρ vanishes at {:?}", t));
    }
    let kappa = 2.0 / gn;
    let d = dz(&(&g * kappa));
    let dbar = [d[0].conj(), d[1].conj()];
    let alpha = complex_to_real(&[[dbar[1], -dbar[0]], [d[0], d[1]]]);
    let l = standardizing_map(&(&alpha * j.matrix(t) * alpha.clone().try_inverse().expect("det = |∂ρ|^2 > 0")))?;
    let la = &l * &alpha;
    let la_inv = la.clone().try_inverse().ok_or_else(|| err!(Degenerate, "singular normalization"))?;
    // linear part of κρ in the w = L α chart: Re(c1 w1 + c2 w2)
    let gw = la_inv.transpose() * (&g * kappa);
    let c1 = Complex64::new(gw[0], -gw[1]);
    let c2 = Complex64::new(gw[2], -gw[3]);
    if c2.norm() < 1e-12 {
        return Err(err!(Degenerate, "normal direction is lost in the chart at {:?}", t));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let m = complex_to_real(&[[one, zero], [c1 * 0.5, c2 * 0.5]]);
    let tm = &m * &la;
    let tm_inv = tm.clone().try_inverse().ok_or_else(|| err!(Degenerate, "singular normalization"))?;
    let shift: Vec<f64> = (-(&tm * DVector::from_column_slice(t))).iter().copied().collect();
    let structure = j.push_affine(&tm, &shift)?;
    let defining = rho.compose_affine(&tm_inv, t, kappa)?;
    let transform = AffineMap::new(tm, shift)?;

    let origin = [0.0; 4];
    let j0 = (structure.matrix(&origin) - j_st(4)).amax();
    let lin = (defining.gradient(&origin) - DVector::from_column_slice(&[0.0, 0.0, 2.0, 0.0])).amax();
    let t0 = crate::linalg::norm2(&{
        use crate::maps::Diffeo;
        transform.map(t)
    });
    if j0 > 1e-10 || lin > 1e-10 || t0 > 1e-12 * (1.0 + crate::linalg::norm2(t)) {
        return Err(err!(Assembly, "normalization invariants fail: |J(0) - J_st| = {j0:e}, linear part {lin:e}, |T(t)| = {t0:e}"));
    }
    Ok(NormalizationStep { t: t.to_vec(), kappa, alpha, l, m, transform, structure, defining })
}

/// Model domain read off the second-order Taylor expansion of the
/// normalized defining function at `t`.
pub fn model_domain(rho: &ScalarField, j: &StructureField, t: &[f64]) -> Result<ModelDomain> {
    let step = pinchuk_normalize(rho, j, t)?;
    let h2 = step.defining.hessian(&[0.0; 4]);
    // (1/2) [a x^2 + 2 b x y + c y^2] = 2 Re(k z^2) + h |z|^2
    let (a, b, c) = (h2[(0, 0)], h2[(0, 1)], h2[(1, 1)]);
    let h = 0.25 * (a + c);
    let k = Complex64::new(0.125 * (a - c), -0.25 * b);
    let model = ModelDomain::new(k, h)?;
    let pc = is_strictly_pseudoconvex(j, rho, &[t.to_vec()])?;
    if !pc.pass {
        return Err(err!(Precondition, "the boundary is not strictly pseudoconvex at {:?}", t));
    }
    Ok(model)
}

/// Nearest point of `{ρ = 0}`: iterate `t <- p + s n(t)` with `s` from
/// Newton's method on `s -> ρ(p + s n)`.
pub fn boundary_projection(rho: &ScalarField, p: &[f64]) -> Result<(Vec<f64>, f64)> {
    let along = |n: &DVector<f64>, s: f64| -> Vec<f64> { p.iter().zip(n.iter()).map(|(a, b)| a + s * b).collect() };
    let unit = |x: &[f64]| -> Result<DVector<f64>> {
        let g = rho.gradient(x);
        let gn = g.norm();
        if gn < 1e-12 {
            return Err(err!(Degenerate, "dρ vanishes at {:?}", x));
        }
        Ok(g / gn)
    };
    let mut n = unit(p)?;
    let mut s = 0.0;
    let mut t = p.to_vec();
    for _ in 0..100 {
        for _ in 0..100 {
            let x = along(&n, s);
            let v = rho.value(&x);
            let dv = rho.gradient(&x).dot(&n);
            if dv.abs() < 1e-14 {
                return Err(err!(Degenerate, "Newton step along the normal stalls at {:?}", x));
            }
            let ds = v / dv;
            s -= ds;
            if ds.abs() <= 1e-14 * (1.0 + s.abs()) && v.abs() <= 1e-10 {
                break;
            }
        }
        let next = along(&n, s);
        let n2 = unit(&next)?;
        let change = (&n2 - &n).amax();
        t = next;
        // keep the sign so that s stays the signed distance along n
        n = n2;
        s = t.iter().zip(p).zip(n.iter()).map(|((a, b), c)| (a - b) * c).sum();
        if change < 1e-13 {
            break;
        }
    }
    if !(rho.value(&t).abs() <= 1e-10) {
        return Err(err!(Degenerate, "boundary projection did not converge from {:?}", p));
    }
    let d = crate::linalg::norm2(&t.iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok((t, d))
}

/// Grid points of `[-r, r]^4` inside the polydisc `|z1|, |z2| <= r`.
pub fn polydisc_samples(r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for_each_grid_point(4, per_axis, r, |z| {
        if z[0] * z[0] + z[1] * z[1] <= r * r * (1.0 + 1e-12) && z[2] * z[2] + z[3] * z[3] <= r * r * (1.0 + 1e-12) {
            out.push(z.to_vec());
        }
    });
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    /// Polydisc radius for the diagnostics.
    pub radius: f64,
    pub per_axis: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { radius: 1.0, per_axis: 5 }
    }
}

#[derive(Debug, Clone)]
pub struct ScalingStep {
    pub point: Vec<f64>,
    /// `δ_k = dist(p^k, ∂D)`.
    pub delta: f64,
    pub foot: Vec<f64>,
    pub normalization: NormalizationStep,
    /// `Ĵ_k`.
    pub structure: StructureField,
    /// `ρ̂_k`.
    pub defining: ScalarField,
    /// `p̂^k`.
    pub point_hat: Vec<f64>,
    /// `sup |Ĵ_k - J_st|` on the polydisc.
    pub structure_sup: f64,
    /// Sampled C^2 distance of `Ĵ_k` to `J_st` on the polydisc.
    pub structure_c2: f64,
    /// Sampled C^2 distance of `ρ̂_k` to the model on the polydisc.
    pub defining_c2: f64,
    /// `|p̂^k - (0, -1)|`.
    pub point_error: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingSequence {
    pub model: ModelDomain,
    pub steps: Vec<ScalingStep>,
}

fn c2_on(samples: &[Vec<f64>], a: &ScalarField, b: &ScalarField) -> f64 {
    samples.iter().fold(0.0f64, |w, z| {
        w.max((a.value(z) - b.value(z)).abs())
            .max((a.gradient(z) - b.gradient(z)).amax())
            .max((a.hessian(z) - b.hessian(z)).amax())
    })
}

/// Normalizes at the foot of each `p^k`, dilates by `δ_k` and compares with
/// the model at the limit point `t`.
pub fn scaling_sequence(
    rho: &ScalarField,
    j: &StructureField,
    t: &[f64],
    points: &[Vec<f64>],
    cfg: &ScalingConfig,
) -> Result<ScalingSequence> {
    let model = model_domain(rho, j, t)?;
    let samples = polydisc_samples(cfg.radius, cfg.per_axis);
    let js = j_st(4);
    let mut steps = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != 4 {
            return Err(err!(Dimension, "points must lie in C^2"));
        }
        if !(rho.value(p) < 0.0) {
            return Err(err!(Domain, "point {:?} is not in the domain", p));
        }
        let (foot, delta) = boundary_projection(rho, p)?;
        let normalization = pinchuk_normalize(rho, j, &foot)?;
        let spec = DilationSpec::nonisotropic(delta)?;
        let structure = dilate_structure(&normalization.structure, &spec)?;
        let defining = dilate_defining(&normalization.defining, &spec)?;
        let point_hat = spec.apply(&normalization.apply(p))?;
        let structure_sup = samples.iter().map(|z| (structure.matrix(z) - &js).amax()).fold(0.0, f64::max);
        let structure_c2 = c2_distance_to_const(&structure, &js, cfg.radius, false, cfg.per_axis).max(structure_sup);
        let defining_c2 = c2_on(&samples, &defining, &model.defining);
        let point_error = crate::linalg::norm2(&[point_hat[0], point_hat[1], point_hat[2] + 1.0, point_hat[3]]);
        steps.push(ScalingStep {
            point: p.clone(),
            delta,
            foot,
            normalization,
            structure,
            defining,
            point_hat,
            structure_sup,
            structure_c2,
            defining_c2,
            point_error,
        });
    }
    Ok(ScalingSequence { model, steps })
}
