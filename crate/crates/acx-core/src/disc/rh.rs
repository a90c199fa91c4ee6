//! Riemann-Hilbert data for discs attached to a totally real submanifold,
//! the linearized boundary operator, and Bishop disc families.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::equation::{solve_j_disc, DeformationTensor, PicardConfig};
use super::{to_real, Disc, PolarGrid, Series};
use crate::error::{err, Result};
use crate::field::ScalarField;
use crate::linalg::{null_space, orthonormalize};
use crate::poly::{ComplexPoly, Poly};

/// `E = {r_1 = ... = r_n = 0}` with a reference holomorphic disc `f0`
/// attached to it.
#[derive(Debug, Clone)]
pub struct RiemannHilbertData {
    pub r: Vec<ScalarField>,
    /// Taylor coefficients of `f0`, one vector per component.
    pub f0: Vec<Vec<Complex64>>,
}

/// The standard torus `|z_k| = 1` with `f0(ζ) = (ζ, ..., ζ)`.
pub fn torus_data(n: usize) -> RiemannHilbertData {
    let r = (0..n)
        .map(|k| ScalarField::from_poly(ComplexPoly::abs2_z(n, k).sub(&Poly::constant(2 * n, 1.0))))
        .collect();
    let f0 = (0..n).map(|_| vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).collect();
    RiemannHilbertData { r, f0 }
}

impl RiemannHilbertData {
    pub fn n(&self) -> usize {
        self.r.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.f0.len() != n {
            return Err(err!(Dimension, "need n defining functions and an n-component disc"));
        }
        if self.r.iter().any(|r| r.dim() != 2 * n) {
            return Err(err!(Dimension, "defining functions must live on R^{}", 2 * n));
        }
        Ok(())
    }

    pub fn f0_at(&self, zeta: Complex64) -> Vec<Complex64> {
        self.f0
            .iter()
            .map(|t| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut p = Complex64::new(1.0, 0.0);
                for a in t {
                    acc += a * p;
                    p *= zeta;
                }
                acc
            })
            .collect()
    }

    /// `G_ij(ζ) = ∂r_i/∂z^j (f0(ζ))`.
    pub fn g_matrix(&self, zeta: Complex64) -> DMatrix<Complex64> {
        let n = self.n();
        let x = to_real(&self.f0_at(zeta));
        let mut g = DMatrix::zeros(n, n);
        for (i, r) in self.r.iter().enumerate() {
            let d = r.gradient(&x);
            for j in 0..n {
                g[(i, j)] = Complex64::new(d[2 * j], -d[2 * j + 1]) * 0.5;
            }
        }
        g
    }
}

/// Real matrix of `h -> 2 Re[G h]` from Taylor coefficients to boundary
/// nodes. Column `2 (k (N+1) + m)` is `Re a_{k,m}`, the next one `Im a_{k,m}`;
/// row `i M + l` is condition `i` at node `l`.
#[derive(Debug, Clone)]
pub struct RhOperator {
    pub matrix: DMatrix<f64>,
    pub n: usize,
    pub order: usize,
    pub nodes: usize,
}

impl RhOperator {
    /// Number of singular values below `rel_tol * sigma_max`, plus the
    /// column excess.
    pub fn rank_deficiency(&self, rel_tol: f64) -> usize {
        crate::linalg::rank_deficiency(&self.matrix, rel_tol)
    }

    /// Orthonormal kernel basis as columns.
    pub fn kernel(&self, rel_tol: f64) -> DMatrix<f64> {
        null_space(&self.matrix, rel_tol)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.matrix.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
        s
    }

    /// Taylor coefficients encoded by a coefficient vector.
    pub fn decode(&self, x: &[f64]) -> Vec<Vec<Complex64>> {
        decode(x, self.n, self.order)
    }
}

fn decode(x: &[f64], n: usize, order: usize) -> Vec<Vec<Complex64>> {
    (0..n)
        .map(|k| {
            (0..=order)
                .map(|m| {
                    let c = 2 * (k * (order + 1) + m);
                    Complex64::new(x[c], x[c + 1])
                })
                .collect()
        })
        .collect()
}

fn encode(t: &[Vec<Complex64>], order: usize) -> Vec<f64> {
    let n = t.len();
    let mut x = vec![0.0; 2 * n * (order + 1)];
    for (k, coeffs) in t.iter().enumerate() {
        for (m, c) in coeffs.iter().enumerate().take(order + 1) {
            x[2 * (k * (order + 1) + m)] = c.re;
            x[2 * (k * (order + 1) + m) + 1] = c.im;
        }
    }
    x
}

/// Discretized `h -> 2 Re[G h]` on `4 (N + 1)` boundary nodes.
pub fn linearized_rh_operator(data: &RiemannHilbertData, order: usize) -> Result<RhOperator> {
    data.check()?;
    let n = data.n();
    let nodes = 4 * (order + 1);
    let circle = PolarGrid::circle(nodes);
    let cols = 2 * n * (order + 1);
    let mut a = DMatrix::zeros(n * nodes, cols);
    for (l, &z) in circle.iter().enumerate() {
        let g = data.g_matrix(z);
        let real = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let v = g[(r % n, c % n)];
            match (r / n, c / n) {
                (0, 0) | (1, 1) => v.re,
                (0, 1) => -v.im,
                _ => v.im,
            }
        });
        let sv = real.svd(false, false).singular_values;
        if sv.min() <= 1e-10 * sv.max() {
            return Err(err!(Data, "G is rank deficient at boundary node {l}"));
        }
        let mut zp = Complex64::new(1.0, 0.0);
        for m in 0..=order {
            for i in 0..n {
                for k in 0..n {
                    let w = g[(i, k)] * zp;
                    let c = 2 * (k * (order + 1) + m);
                    a[(i * nodes + l, c)] += 2.0 * w.re;
                    a[(i * nodes + l, c + 1)] -= 2.0 * w.im;
                }
            }
            zp *= z;
        }
    }
    Ok(RhOperator { matrix: a, n, order, nodes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BishopConfig {
    pub order: usize,
    pub nr: usize,
    pub ntheta: usize,
    /// Target for the residual; iteration stops once it is reached.
    pub tol: f64,
    /// Largest residual accepted when the iteration stagnates above `tol`.
    pub accept: f64,
    pub max_newton: usize,
    pub fd_step: f64,
    pub picard: PicardConfig,
}

impl Default for BishopConfig {
    fn default() -> Self {
        BishopConfig {
            order: 12,
            nr: 24,
            ntheta: 48,
            tol: 1e-12,
            accept: 1e-8,
            max_newton: 25,
            fd_step: 1e-7,
            picard: PicardConfig { tol: 1e-13, ..PicardConfig::default() },
        }
    }
}

#[derive(Debug, Clone)]
pub struct BishopSolution {
    pub disc: Disc,
    pub iterations: usize,
    /// `sup |r(f)|` on a boundary circle four times denser than the nodes.
    pub boundary_residual: f64,
    /// `|K^T (a - a0) - t|_inf`.
    pub parameter_residual: f64,
    /// Residual norms per Newton step.
    pub history: Vec<f64>,
}

struct FamilyProblem<'a> {
    data: &'a RiemannHilbertData,
    q: &'a DeformationTensor,
    lambda: f64,
    grid: PolarGrid,
    cfg: &'a BishopConfig,
    circle: Vec<Complex64>,
    kernel: DMatrix<f64>,
    a0: DVector<f64>,
    t: DVector<f64>,
}

impl FamilyProblem<'_> {
    fn disc(&self, a: &[f64]) -> Result<Disc> {
        let h = decode(a, self.data.n(), self.cfg.order);
        if self.q.is_zero() || self.lambda == 0.0 && self.q.vanishes_at_zero() {
            let comps = h.iter().map(|t| Series::holomorphic(self.cfg.order, t)).collect();
            return Ok(Disc::new(comps, &self.grid));
        }
        Ok(solve_j_disc(self.q, self.lambda, &h, &self.grid, &self.cfg.picard)?.disc)
    }

    fn boundary(&self, disc: &Disc, circle: &[Complex64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.n() * circle.len());
        for r in &self.data.r {
            for &z in circle {
                out.push(r.value(&disc.eval_real(z)));
            }
        }
        out
    }

    fn residual(&self, a: &[f64]) -> Result<DVector<f64>> {
        let disc = self.disc(a)?;
        let mut res = self.boundary(&disc, &self.circle);
        let d = DVector::from_column_slice(a) - &self.a0;
        let p = self.kernel.transpose() * d - &self.t;
        res.extend(p.iter());
        Ok(DVector::from_vec(res))
    }
}

/// Disc of the `J_λ`-holomorphic Bishop family with parameter `t`, found by
/// Gauss-Newton on the Taylor coefficients of the holomorphic part. The
/// family is parametrized by the kernel of the linearized operator at `f0`.
pub fn bishop_family(
    data: &RiemannHilbertData,
    q: &DeformationTensor,
    lambda: f64,
    t: &[f64],
    cfg: &BishopConfig,
) -> Result<BishopSolution> {
    data.check()?;
    let n = data.n();
    if q.n() != n {
        return Err(err!(Dimension, "tensor acts on C^{}, data on C^{n}", q.n()));
    }
    let op = linearized_rh_operator(data, cfg.order)?;
    let (kernel, _) = orthonormalize(&op.kernel(1e-8));
    if kernel.ncols() != t.len() {
        return Err(err!(Dimension, "family has {} parameters, got {}", kernel.ncols(), t.len()));
    }
    let grid = PolarGrid::new(cfg.nr, cfg.ntheta, cfg.order)?;
    let a0 = DVector::from_vec(encode(&data.f0, cfg.order));
    let tv = DVector::from_column_slice(t);
    let prob = FamilyProblem {
        data,
        q,
        lambda,
        grid,
        cfg,
        circle: PolarGrid::circle(op.nodes),
        kernel: kernel.clone(),
        a0: a0.clone(),
        t: tv.clone(),
    };
    let mut a = &a0 + &kernel * &tv;
    let mut res = prob.residual(a.as_slice())?;
    let mut history = vec![res.amax()];
    let mut iterations = 0;
    while res.amax() > cfg.tol && iterations < cfg.max_newton {
        let mut jac = DMatrix::zeros(res.len(), a.len());
        for c in 0..a.len() {
            let mut ap = a.clone();
            let mut am = a.clone();
            ap[c] += cfg.fd_step;
            am[c] -= cfg.fd_step;
            let col = (prob.residual(ap.as_slice())? - prob.residual(am.as_slice())?) / (2.0 * cfg.fd_step);
            jac.set_column(c, &col);
        }
        let svd = jac.svd(true, true);
        let step = svd
            .solve(&res, 1e-12 * svd.singular_values.max())
            .map_err(|e| err!(Data, "least-squares step failed: {e}"))?;
        // backtracking keeps the iteration monotone
        let mut damp = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let trial = &a - &step * damp;
            let r = prob.residual(trial.as_slice())?;
            if r.norm() < res.norm() {
                a = trial;
                res = r;
                accepted = true;
                break;
            }
            damp *= 0.5;
        }
        iterations += 1;
        history.push(res.amax());
        if !accepted || step.norm() * damp < 1e-14 * (1.0 + a.norm()) {
            break;
        }
    }
    if res.amax() > cfg.tol.max(cfg.accept) {
        return Err(crate::Error::Convergence {
            reason: format!("Gauss-Newton stopped after {iterations} steps"),
            residual: res.amax(),
        });
    }
    let disc = prob.disc(a.as_slice())?;
    let dense = PolarGrid::circle(4 * op.nodes);
    let boundary_residual = prob.boundary(&disc, &dense).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let p = kernel.transpose() * (&a - &a0) - &tv;
    Ok(BishopSolution { disc, iterations, boundary_residual, parameter_residual: p.amax(), history })
}
