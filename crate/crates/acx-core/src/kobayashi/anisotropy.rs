//! Matrix of a tangent map in boundary-adapted complex frames.
//!
//! At `z` the frame is `X1`, a unit vector of `H^J_z` of the level set of
//! `ρ` through `z`, and `X2 = ∇ρ / |∇ρ|`. Both are completed to complex
//! frames with `J`, so `df X_j = Σ_k A_kj X'_k` with complex `A_kj`.

use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::boundary::boundary_distance;
use crate::error::{err, Result};
use crate::field::{BoxDomain, ScalarField, StructureField};
use crate::maps::Diffeo;
use crate::math::loglog_slope;
use crate::structure::holomorphic_tangent;

/// Real `4 x 4` frame `[X1, J X1, X2, J X2]`.
fn frame(j: &StructureField, rho: &ScalarField, z: &[f64]) -> Result<DMatrix<f64>> {
    let h = holomorphic_tangent(j, rho, z)?;
    let g = rho.gradient(z);
    let gn = g.norm();
    if gn < 1e-12 || h.ncols() != 2 {
        return Err(err!(Degenerate, "no adapted frame at {:?}", z));
    }
    let jm = j.matrix(z);
    let x1 = h.column(0).into_owned();
    let x2 = g / gn;
    let jx1 = &jm * &x1;
    let jx2 = &jm * &x2;
    Ok(DMatrix::from_columns(&[x1, jx1, x2, jx2]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropySample {
    pub point: Vec<f64>,
    pub dist: f64,
    /// `|A_kj|`, row-major.
    pub abs: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyReport {
    pub samples: Vec<AnisotropySample>,
    /// Fitted exponent of `|A_kj|` against the boundary distance;
    /// infinite when the entry vanishes on all samples.
    pub exponents: [[f64; 2]; 2],
    /// `max |df J - J' df|` over samples.
    pub holomorphy_residual: f64,
    /// Exponents at least `(0, -1/2, 1/2, 0)` up to `0.1`.
    pub consistent: bool,
}

/// Bound on `|A_kj|` below which an entry counts as vanishing.
const ZERO_ENTRY: f64 = 1e-12;

#[allow(clippy::too_many_arguments)]
pub fn tangent_map_anisotropy(
    f: &dyn Diffeo,
    d: &BoxDomain,
    d2: &BoxDomain,
    j: &StructureField,
    j2: &StructureField,
    points: &[Vec<f64>],
) -> Result<AnisotropyReport> {
    if d.dim != 4 || d2.dim != 4 || j.dim() != 4 || j2.dim() != 4 || f.dim() != 4 {
        return Err(err!(Dimension, "adapted frames are built on C^2"));
    }
    let rho = d.defining.as_ref().ok_or_else(|| err!(Parameter, "D needs a defining function"))?;
    let rho2 = d2.defining.as_ref().ok_or_else(|| err!(Parameter, "D' needs a defining function"))?;
    let mut samples = Vec::with_capacity(points.len());
    let mut hres = 0.0f64;
    for z in points {
        let w = f.map(z);
        let df = f.jacobian(z);
        let r = (&df * j.matrix(z) - j2.matrix(&w) * &df).amax();
        hres = hres.max(r);
        if r > 1e-8 * (1.0 + df.amax()) {
            return Err(err!(Precondition, "f is not (J, J')-holomorphic at {:?} (residual {r:e})", z));
        }
        let x = frame(j, rho, z)?;
        let x2 = frame(j2, rho2, &w)?;
        let inv = x2.try_inverse().ok_or_else(|| err!(Degenerate, "singular frame at {:?}", w))?;
        let c = inv * &df * x;
        let mut abs = [[0.0; 2]; 2];
        for (k, row) in abs.iter_mut().enumerate() {
            for (jj, e) in row.iter_mut().enumerate() {
                *e = Complex64::new(c[(2 * k, 2 * jj)], c[(2 * k + 1, 2 * jj)]).norm();
            }
        }
        samples.push(AnisotropySample { point: z.clone(), dist: boundary_distance(d, z)?, abs });
    }
    if samples.len() < 2 {
        return Err(err!(Parameter, "need at least two sample points"));
    }
    let dists: Vec<f64> = samples.iter().map(|s| s.dist).collect();
    let mut exponents = [[0.0; 2]; 2];
    for k in 0..2 {
        for jj in 0..2 {
            let ys: Vec<f64> = samples.iter().map(|s| s.abs[k][jj]).collect();
            exponents[k][jj] = if ys.iter().all(|&y| y < ZERO_ENTRY) {
                f64::INFINITY
            } else {
                loglog_slope(&dists, &ys.iter().map(|y| y.max(1e-300)).collect::<Vec<_>>())
            };
        }
    }
    let e = &exponents;
    let consistent = e[0][0] >= -0.1 && e[1][1] >= -0.1 && e[0][1] >= -0.6 && e[1][0] >= 0.4;
    Ok(AnisotropyReport { samples, exponents, holomorphy_residual: hres, consistent })
}
