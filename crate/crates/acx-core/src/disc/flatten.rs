//! Coordinates in which a totally real curve becomes `R` and the structure
//! agrees with `J_st` to high order along it (complex dimension one).
//!
//! After straightening the graph `y = φ(x)`, a complex coordinate `w` with
//! `w(x, 0) = x` is built order by order in `y` from `w_y = μ w_x`, where
//! `μ = (i - a) / b` and `J ∂x = a ∂x + b ∂y`. Truncating after `y^(k+1)`
//! leaves a deformation tensor of size `O(|y|^(k+1))`. The coefficients
//! `W_l(x)` are rational in `x`, so charts are built from Taylor jets
//! around a base point `x0`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::equation::tensor_of_matrix;
use crate::error::{err, Result};
use crate::field::{j_st, StructureField};
use crate::math::loglog_slope;
use crate::poly::{ComplexPoly, Poly, PolyMatrix};

/// `E = {y = φ(x)}` in `C`; `phi` is a polynomial in one variable.
#[derive(Debug, Clone)]
pub struct GraphData {
    pub phi: Poly,
}

impl GraphData {
    pub fn new(phi: Poly) -> Result<Self> {
        if phi.nvars() != 1 {
            return Err(err!(Dimension, "graph function must have one variable"));
        }
        Ok(GraphData { phi })
    }

    pub fn flat() -> Self {
        GraphData { phi: Poly::zero(1) }
    }
}

#[derive(Debug, Clone)]
pub struct FlatteningMap {
    phi: Poly,
    dphi: Poly,
    j: StructureField,
    straightened: PolyMatrix,
    k_max: usize,
}

/// Complex polynomial jets in `(s, y)` truncated at total degree `deg`.
fn jmul(a: &ComplexPoly, b: &ComplexPoly, deg: u32) -> ComplexPoly {
    let p = a.mul(b);
    ComplexPoly { re: p.re.truncate(deg), im: p.im.truncate(deg) }
}

fn jinv(b: &ComplexPoly, deg: u32) -> Result<ComplexPoly> {
    let b0 = Complex64::new(b.re.coeff(&[0, 0]), b.im.coeff(&[0, 0]));
    if b0.norm() < 1e-12 {
        return Err(err!(Degenerate, "J ∂x has no ∂y component"));
    }
    let inv0 = b0.inv();
    // 1/b = inv0 * sum (-(b - b0) inv0)^k
    let beta = b.add(&ComplexPoly::constant(2, -b0.re, -b0.im)).scale(-inv0.re, -inv0.im);
    let mut acc = ComplexPoly::constant(2, 1.0, 0.0);
    let mut term = ComplexPoly::constant(2, 1.0, 0.0);
    for _ in 0..deg {
        term = jmul(&term, &beta, deg);
        acc = acc.add(&term);
    }
    Ok(acc.scale(inv0.re, inv0.im))
}

/// Coefficient of `y^l` as a polynomial in `(s, y)` with no `y`.
fn y_coeff(p: &ComplexPoly, l: u32) -> ComplexPoly {
    let pick = |q: &Poly| {
        Poly::from_terms(2, q.terms().filter(|(e, _)| e[1] == l).map(|(e, c)| (c, vec![e[0], 0])))
    };
    ComplexPoly { re: pick(&p.re), im: pick(&p.im) }
}

fn ds(p: &ComplexPoly) -> ComplexPoly {
    ComplexPoly { re: p.re.deriv(0), im: p.im.deriv(0) }
}

/// Flattening of `E` for a polynomial structure on `R^2` with `J(0) = J_st`.
pub fn flatten_totally_real(j: &StructureField, e: &GraphData, k_max: usize) -> Result<FlatteningMap> {
    if j.dim() != 2 {
        return Err(err!(Unsupported, "flattening is implemented for complex dimension one only"));
    }
    let pm = j
        .as_poly()
        .ok_or_else(|| err!(Unsupported, "flattening needs a polynomial structure"))?
        .clone();
    if (j.matrix(&[0.0, 0.0]) - j_st(2)).amax() > 1e-12 {
        return Err(err!(Precondition, "J(0) must equal J_st"));
    }
    let dphi = e.phi.deriv(0);
    if dphi.eval(&[0.0]).abs() > 1e-12 || e.phi.eval(&[0.0]).abs() > 1e-12 {
        return Err(err!(Precondition, "E must pass through 0 tangent to R"));
    }
    // J1(x, y') = DΦ J(x, y' + φ(x)) DΦ^{-1}, DΦ = [[1, 0], [-φ', 1]]
    let x = Poly::var(2, 0);
    let y = Poly::var(2, 1);
    let phi2 = e.phi.compose(&[x.clone()]);
    let dphi2 = dphi.compose(&[x.clone()]);
    let moved = pm.map(|p| p.compose(&[x.clone(), y.add(&phi2)]));
    let one = Poly::constant(2, 1.0);
    let zero = Poly::zero(2);
    let d = PolyMatrix::new(2, vec![one.clone(), zero.clone(), dphi2.scale(-1.0), one.clone()]);
    let dinv = PolyMatrix::new(2, vec![one.clone(), zero, dphi2, one]);
    let straightened = d.mul(&moved).mul(&dinv);
    Ok(FlatteningMap { phi: e.phi.clone(), dphi, j: j.clone(), straightened, k_max })
}

impl FlatteningMap {
    /// `Φ(x, y) = (x, y - φ(x))`.
    pub fn straighten(&self, p: &[f64]) -> [f64; 2] {
        [p[0], p[1] - self.phi.eval(&p[..1])]
    }

    /// The structure pushed forward by the straightening map.
    pub fn straightened_structure(&self) -> Result<StructureField> {
        StructureField::from_poly(self.straightened.clone())
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Chart `z*(x, y) = w(x - x0, y - φ(x))` valid near `(x0, φ(x0))`.
    pub fn chart_at(&self, x0: f64) -> Result<LocalChart> {
        let k = self.k_max as u32;
        let deg = k + 3;
        let shift = DMatrix::identity(2, 2);
        let a = self.straightened.get(0, 0).compose_affine(&shift, &[x0, 0.0]).truncate(deg);
        let b = self.straightened.get(1, 0).compose_affine(&shift, &[x0, 0.0]).truncate(deg);
        let num = ComplexPoly { re: a.scale(-1.0), im: Poly::constant(2, 1.0) };
        let mu = jmul(&num, &jinv(&ComplexPoly::real(b), deg)?, deg);
        let mus: Vec<ComplexPoly> = (0..=k).map(|l| y_coeff(&mu, l)).collect();
        let mut w: Vec<ComplexPoly> = vec![ComplexPoly {
            re: Poly::constant(2, x0).add(&Poly::var(2, 0)),
            im: Poly::zero(2),
        }];
        for l in 0..=k as usize {
            let mut acc = ComplexPoly::constant(2, 0.0, 0.0);
            for m in 0..=l {
                acc = acc.add(&jmul(&mus[l - m], &ds(&w[m]), deg));
            }
            w.push(acc.scale(1.0 / (l + 1) as f64, 0.0));
        }
        let y = ComplexPoly::real(Poly::var(2, 1));
        let mut total = ComplexPoly::constant(2, 0.0, 0.0);
        let mut ypow = ComplexPoly::constant(2, 1.0, 0.0);
        for wl in &w {
            total = total.add(&wl.mul(&ypow));
            ypow = ypow.mul(&y);
        }
        Ok(LocalChart { x0, w: total, phi: self.phi.clone(), dphi: self.dphi.clone(), j: self.j.clone() })
    }

    /// Smallest fitted vanishing order of the pushed tensor over base points.
    pub fn vanishing_order(&self, base_points: &[f64]) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for &x0 in base_points {
            worst = worst.min(self.chart_at(x0)?.vanishing_order()?);
        }
        Ok(worst)
    }
}

/// Polynomial chart near one base point of `E`.
#[derive(Debug, Clone)]
pub struct LocalChart {
    x0: f64,
    /// `w(s, y')` in the straightened, shifted variables.
    w: ComplexPoly,
    phi: Poly,
    dphi: Poly,
    j: StructureField,
}

/// Heights above `E` used by [`LocalChart::vanishing_order`].
pub const PROFILE_HEIGHTS: [f64; 5] = [0.05, 0.035, 0.025, 0.0175, 0.0125];

impl LocalChart {
    pub fn map(&self, p: &[f64]) -> Complex64 {
        let s = [p[0] - self.x0, p[1] - self.phi.eval(&p[..1])];
        Complex64::new(self.w.re.eval(&s), self.w.im.eval(&s))
    }

    /// Real Jacobian of the chart at `p`.
    pub fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let s = [p[0] - self.x0, p[1] - self.phi.eval(&p[..1])];
        let dp = self.dphi.eval(&p[..1]);
        let (ux, uy) = (self.w.re.deriv(0).eval(&s), self.w.re.deriv(1).eval(&s));
        let (vx, vy) = (self.w.im.deriv(0).eval(&s), self.w.im.deriv(1).eval(&s));
        // chain rule through (s, y') = (x - x0, y - φ(x))
        DMatrix::from_row_slice(2, 2, &[ux - uy * dp, uy, vx - vy * dp, vy])
    }

    /// Equation coefficient of the pushed structure at the image of `p`.
    pub fn pushed_tensor(&self, p: &[f64]) -> Result<Complex64> {
        let d = self.jacobian(p);
        let dinv = d.clone().try_inverse().ok_or_else(|| err!(Degenerate, "chart is singular at {:?}", p))?;
        let pushed = &d * self.j.matrix(p) * dinv;
        Ok(tensor_of_matrix(&pushed)?[(0, 0)])
    }

    /// `(|Im z*|, |A|)` at points above the base point.
    pub fn profile(&self) -> Result<Vec<(f64, f64)>> {
        let y0 = self.phi.eval(&[self.x0]);
        PROFILE_HEIGHTS
            .iter()
            .map(|&h| {
                let p = [self.x0, y0 + h];
                Ok((self.map(&p).im.abs(), self.pushed_tensor(&p)?.norm()))
            })
            .collect()
    }

    /// Log-log slope of `|A|` against `|Im z*|`; infinite when `A`
    /// vanishes identically at sampling precision.
    pub fn vanishing_order(&self) -> Result<f64> {
        let prof = self.profile()?;
        if prof.iter().all(|&(_, a)| a < 1e-14) {
            return Ok(f64::INFINITY);
        }
        let xs: Vec<f64> = prof.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = prof.iter().map(|p| p.1.max(1e-300)).collect();
        Ok(loglog_slope(&xs, &ys))
    }
}
