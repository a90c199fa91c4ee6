//! Reflection of a disc across the real axis.

use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::equation::DeformationTensor;
use super::{to_real, Disc};
use crate::error::{err, Result};

const FD: f64 = 1e-5;
const SEAM_FD: f64 = 1e-4;

/// `ĝ(ζ) = g(ζ)` for `Im ζ >= 0` and `conj(g(conj ζ))` below.
#[derive(Debug, Clone)]
pub struct ReflectedDisc {
    g: Disc,
    q: DeformationTensor,
    lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionReport {
    /// `sup |Im g|` on `]-1, 1[`.
    pub boundary_distance: f64,
    /// `sup |∂bar ĝ + φ conj(∂ĝ)|` over samples in the upper half.
    pub residual_upper: f64,
    /// Same over samples in the lower half.
    pub residual_lower: f64,
    /// Largest jump of `ĝ` across the seam.
    pub seam_value_jump: f64,
    /// Largest jump of one-sided first derivatives across the seam.
    pub seam_derivative_jump: f64,
}

impl ReflectedDisc {
    pub fn upper(&self, z: Complex64) -> Vec<Complex64> {
        self.g.eval(z)
    }

    pub fn lower(&self, z: Complex64) -> Vec<Complex64> {
        self.g.eval(z.conj()).iter().map(|v| v.conj()).collect()
    }

    pub fn eval(&self, z: Complex64) -> Vec<Complex64> {
        if z.im >= 0.0 {
            self.upper(z)
        } else {
            self.lower(z)
        }
    }

    /// `φ(ζ) = q(g(ζ))` above, `conj(q(g(conj ζ)))` below.
    pub fn phi(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        if z.im >= 0.0 {
            self.q.eval(self.lambda, &to_real(&self.g.eval(z)))
        } else {
            Ok(self.q.eval(self.lambda, &to_real(&self.g.eval(z.conj())))?.map(|v| v.conj()))
        }
    }

    /// Equation residual at `z` with derivatives by central differences
    /// that stay on the side of `z`.
    pub fn residual_at(&self, z: Complex64) -> Result<f64> {
        let side = |w: Complex64| if z.im >= 0.0 { self.upper(w) } else { self.lower(w) };
        let i = Complex64::new(0.0, 1.0);
        let (xp, xm, yp, ym) = (side(z + FD), side(z - FD), side(z + i * FD), side(z - i * FD));
        let phi = self.phi(z)?;
        let n = self.g.n();
        let mut worst = 0.0f64;
        let mut del = Vec::with_capacity(n);
        let mut dbar = Vec::with_capacity(n);
        for a in 0..n {
            let fx = (xp[a] - xm[a]) / (2.0 * FD);
            let fy = (yp[a] - ym[a]) / (2.0 * FD);
            del.push((fx - i * fy) * 0.5);
            dbar.push((fx + i * fy) * 0.5);
        }
        for a in 0..n {
            let mut r = dbar[a];
            for b in 0..n {
                r += phi[(a, b)] * del[b].conj();
            }
            worst = worst.max(r.norm());
        }
        Ok(worst)
    }
}

/// One-sided second-order derivative along `dir` from `z`.
fn one_sided(f: &dyn Fn(Complex64) -> Vec<Complex64>, z: Complex64, dir: Complex64, h: f64) -> Vec<Complex64> {
    let (f0, f1, f2) = (f(z), f(z + dir * h), f(z + dir * 2.0 * h));
    f0.iter()
        .zip(&f1)
        .zip(&f2)
        .map(|((a, b), c)| (-a * 3.0 + b * 4.0 - c) / (2.0 * h))
        .collect()
}

/// Extends `g` (solving the disc equation on the upper half-disc with
/// boundary values near `R^n` on `]-1, 1[`) to the whole disc.
/// `bound` limits `sup |Im g|` on the real segment.
pub fn reflect(g: &Disc, q: &DeformationTensor, lambda: f64, bound: f64) -> Result<(ReflectedDisc, ReflectionReport)> {
    if q.n() != g.n() {
        return Err(err!(Dimension, "tensor acts on C^{}, disc on C^{}", q.n(), g.n()));
    }
    let seam: Vec<f64> = (0..=40).map(|k| -0.95 + 1.9 * k as f64 / 40.0).collect();
    let mut dist = 0.0f64;
    for &x in &seam {
        for v in g.eval(Complex64::new(x, 0.0)) {
            dist = dist.max(v.im.abs());
        }
    }
    if dist > bound {
        return Err(err!(Precondition, "boundary values are {dist:e} away from R^n (bound {bound:e})"));
    }
    let rd = ReflectedDisc { g: g.clone(), q: q.clone(), lambda };

    let mut upper = 0.0f64;
    let mut lower = 0.0f64;
    for ir in 1..=9 {
        let r = 0.1 * ir as f64;
        for it in 1..12 {
            let t = crate::math::PI * it as f64 / 12.0;
            let z = Complex64::new(r * crate::math::cos(t), r * crate::math::sin(t));
            upper = upper.max(rd.residual_at(z)?);
            lower = lower.max(rd.residual_at(z.conj())?);
        }
    }

    let up = |w: Complex64| rd.upper(w);
    let lo = |w: Complex64| rd.lower(w);
    let i = Complex64::new(0.0, 1.0);
    let mut vjump = 0.0f64;
    let mut djump = 0.0f64;
    for &x in &seam {
        let z = Complex64::new(x, 0.0);
        for (a, b) in up(z).iter().zip(lo(z)) {
            vjump = vjump.max((a - b).norm());
        }
        let pairs = [
            (one_sided(&up, z, i, SEAM_FD), one_sided(&lo, z, -i, SEAM_FD), -1.0),
            (one_sided(&up, z, Complex64::new(1.0, 0.0), SEAM_FD), one_sided(&lo, z, Complex64::new(1.0, 0.0), SEAM_FD), 1.0),
        ];
        for (du, dl, sign) in pairs {
            // the lower stencil runs along -∂y, hence the sign
            for (a, b) in du.iter().zip(&dl) {
                djump = djump.max((a - b * sign).norm());
            }
        }
    }
    let report = ReflectionReport {
        boundary_distance: dist,
        residual_upper: upper,
        residual_lower: lower,
        seam_value_jump: vjump,
        seam_derivative_jump: djump,
    };
    Ok((rd, report))
}
