//! The disc equation `∂bar f + q(λ, f) conj(∂f) = 0` and its Picard solver.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Disc, PolarGrid, Series};
use crate::error::{err, Result};
use crate::field::{j_st, StructureField};
use crate::poly::ComplexPoly;

pub type TensorFn = Arc<dyn Fn(f64, &[f64]) -> DMatrix<Complex64> + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Zero,
    /// `q(λ, z) = λ P(z)`, entries row-major.
    Linear(Vec<ComplexPoly>),
    /// `q` of the structure `z -> J(λ z)`.
    Structure(StructureField),
    Oracle(TensorFn),
}

/// Complex `n x n` coefficient field `q(λ, z)` of the disc equation.
#[derive(Clone)]
pub struct DeformationTensor {
    n: usize,
    kind: Kind,
    zero_at_zero: bool,
}

impl fmt::Debug for DeformationTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match &self.kind {
            Kind::Zero => "zero",
            Kind::Linear(_) => "linear",
            Kind::Structure(_) => "structure",
            Kind::Oracle(_) => "oracle",
        };
        f.debug_struct("DeformationTensor").field("n", &self.n).field("kind", &k).finish()
    }
}

/// Real `2n x 2n` matrix `Q = (J_st + J)^{-1} (J_st - J)`.
///
/// `Q` is antilinear, `Q w = qt conj(w)`, and a map is `J`-holomorphic iff
/// `∂bar f = Q ∂f`; the equation coefficient is `q = -qt`.
pub fn tensor_of_matrix(j: &DMatrix<f64>) -> Result<DMatrix<Complex64>> {
    let dim = j.nrows();
    let js = j_st(dim);
    let a = (&js + j)
        .try_inverse()
        .ok_or_else(|| err!(Degenerate, "J_st + J is singular"))?;
    let q = a * (&js - j);
    let n = dim / 2;
    Ok(DMatrix::from_fn(n, n, |r, c| -Complex64::new(q[(2 * r, 2 * c)], q[(2 * r + 1, 2 * c)])))
}

impl DeformationTensor {
    pub fn zero(n: usize) -> Self {
        DeformationTensor { n, kind: Kind::Zero, zero_at_zero: true }
    }

    /// `q(λ, z) = λ P(z)` for polynomial entries in the `2n` real coordinates.
    pub fn linear(n: usize, entries: Vec<ComplexPoly>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(err!(Dimension, "expected {} entries, got {}", n * n, entries.len()));
        }
        if entries.iter().any(|e| e.re.nvars() != 2 * n || e.im.nvars() != 2 * n) {
            return Err(err!(Dimension, "entries must be polynomials in {} variables", 2 * n));
        }
        Ok(DeformationTensor { n, kind: Kind::Linear(entries), zero_at_zero: true })
    }

    /// Diagonal `q(λ, z) = λ diag(P_1, ..., P_n)`.
    pub fn diagonal(diag: Vec<ComplexPoly>) -> Result<Self> {
        let n = diag.len();
        let zero = ComplexPoly::constant(2 * n, 0.0, 0.0);
        let mut entries = vec![zero; n * n];
        for (a, p) in diag.into_iter().enumerate() {
            entries[a * n + a] = p;
        }
        Self::linear(n, entries)
    }

    /// Tensor of the family `J_λ(z) = J(λ z)`; requires `J(0) = J_st`
    /// for `q(0, ·) = 0`. At `λ = 1` this is the tensor of `J` itself.
    pub fn from_structure(j: &StructureField) -> Self {
        let dim = j.dim();
        let origin = vec![0.0; dim];
        let at0 = (j.matrix(&origin) - j_st(dim)).amax() <= 1e-12;
        let constant_standard = at0
            && j.as_poly().map(|p| p.entries().iter().all(|e| e.degree() == 0)).unwrap_or(false);
        if constant_standard {
            return Self::zero(dim / 2);
        }
        DeformationTensor { n: dim / 2, kind: Kind::Structure(j.clone()), zero_at_zero: at0 }
    }

    pub fn from_fn(n: usize, zero_at_zero: bool, f: impl Fn(f64, &[f64]) -> DMatrix<Complex64> + Send + Sync + 'static) -> Self {
        DeformationTensor { n, kind: Kind::Oracle(Arc::new(f)), zero_at_zero }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    /// Whether `q(0, ·) ≡ 0` is guaranteed.
    pub fn vanishes_at_zero(&self) -> bool {
        self.zero_at_zero
    }

    pub fn eval(&self, lambda: f64, z: &[f64]) -> Result<DMatrix<Complex64>> {
        let n = self.n;
        match &self.kind {
            Kind::Zero => Ok(DMatrix::zeros(n, n)),
            Kind::Linear(e) => Ok(DMatrix::from_fn(n, n, |r, c| {
                let p = &e[r * n + c];
                Complex64::new(p.re.eval(z), p.im.eval(z)) * lambda
            })),
            Kind::Structure(j) => {
                let zl: Vec<f64> = z.iter().map(|v| v * lambda).collect();
                tensor_of_matrix(&j.matrix(&zl))
            }
            Kind::Oracle(f) => {
                let m = f(lambda, z);
                if m.nrows() != n || m.ncols() != n {
                    return Err(err!(Dimension, "tensor oracle returned {}x{}", m.nrows(), m.ncols()));
                }
                Ok(m)
            }
        }
    }

    /// Largest Frobenius norm of `q(λ, ·)` over the given points.
    pub fn sup_norm(&self, lambda: f64, points: &[Vec<f64>]) -> Result<f64> {
        let mut s = 0.0f64;
        for z in points {
            s = s.max(self.eval(lambda, z)?.norm());
        }
        Ok(s)
    }
}

/// Normalization imposed after each Picard step.
#[derive(Debug, Clone, PartialEq)]
pub enum Pin {
    None,
    /// `f(0) = p` and `∂_x f(0) = v` (complex components).
    Center { p: Vec<Complex64>, v: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Consecutive increment growths tolerated before giving up.
    pub growth_limit: usize,
    /// Bound on `|q|` along the iterates.
    pub q_bound: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { tol: 1e-10, max_iter: 50, growth_limit: 5, q_bound: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct JDiscSolution {
    pub disc: Disc,
    pub iterations: usize,
    /// `sup |f_{m+1} - f_m|` on the grid, per step.
    pub increments: Vec<f64>,
    /// `sup |∂bar f + q(f) conj(∂f)|` on the grid.
    pub residual: f64,
    pub q_sup: f64,
}

/// Picard iteration `f <- h + T(-q(λ, f) conj(∂f))`.
pub fn solve_j_disc(
    q: &DeformationTensor,
    lambda: f64,
    h: &[Vec<Complex64>],
    grid: &PolarGrid,
    cfg: &PicardConfig,
) -> Result<JDiscSolution> {
    solve_j_disc_pinned(q, lambda, h, &Pin::None, grid, cfg)
}

fn pin(comps: &mut [Series], pin: &Pin) {
    if let Pin::Center { p, v } = pin {
        for (a, s) in comps.iter_mut().enumerate() {
            s.set(0, 0, p[a]);
            let c01 = s.get(0, 1);
            s.set(1, 0, v[a] - c01);
        }
    }
}

/// Right-hand side `-q(λ, f) conj(∂f)` on the grid, plus `sup |q|`.
fn rhs(
    q: &DeformationTensor,
    lambda: f64,
    f: &[Vec<Complex64>],
    df: &[Vec<Complex64>],
    len: usize,
) -> Result<(Vec<Vec<Complex64>>, f64)> {
    let n = q.n();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); len]; n];
    let mut qsup = 0.0f64;
    let mut z = vec![0.0; 2 * n];
    for idx in 0..len {
        for a in 0..n {
            z[2 * a] = f[a][idx].re;
            z[2 * a + 1] = f[a][idx].im;
        }
        let m = q.eval(lambda, &z)?;
        qsup = qsup.max(m.norm());
        for a in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for b in 0..n {
                acc += m[(a, b)] * df[b][idx].conj();
            }
            out[a][idx] = -acc;
        }
    }
    Ok((out, qsup))
}

/// [`solve_j_disc`] with a normalization applied after every step.
pub fn solve_j_disc_pinned(
    q: &DeformationTensor,
    lambda: f64,
    h: &[Vec<Complex64>],
    pin_to: &Pin,
    grid: &PolarGrid,
    cfg: &PicardConfig,
) -> Result<JDiscSolution> {
    let n = q.n();
    if h.len() != n {
        return Err(err!(Dimension, "seed has {} components, tensor acts on {n}", h.len()));
    }
    if let Pin::Center { p, v } = pin_to {
        if p.len() != n || v.len() != n {
            return Err(err!(Dimension, "pin data must have {n} components"));
        }
    }
    if !(cfg.tol > 0.0) {
        return Err(err!(Parameter, "tol must be positive"));
    }
    let order = grid.order();
    let hs: Vec<Series> = h.iter().map(|t| Series::holomorphic(order, t)).collect();
    let mut comps = hs.clone();
    pin(&mut comps, pin_to);
    let mut samples: Vec<Vec<Complex64>> = comps.iter().map(|s| grid.sample(s)).collect();

    let mut increments = Vec::new();
    let mut growth = 0usize;
    let mut qsup;
    let mut iterations = 0;
    if q.is_zero() || lambda == 0.0 && q.vanishes_at_zero() {
        let disc = Disc::new(comps, grid);
        return Ok(JDiscSolution { disc, iterations: 0, increments, residual: 0.0, q_sup: 0.0 });
    }
    loop {
        let dsamples: Vec<Vec<Complex64>> = comps.iter().map(|s| grid.sample(&s.del())).collect();
        let (g, qs) = rhs(q, lambda, &samples, &dsamples, grid.len())?;
        qsup = qs;
        if qs >= cfg.q_bound {
            return Err(err!(Precondition, "|q| reaches {qs:.3} along the iterates (bound {})", cfg.q_bound));
        }
        let mut next = Vec::with_capacity(n);
        for a in 0..n {
            next.push(hs[a].add(&super::cauchy_green(grid, &g[a])?));
        }
        pin(&mut next, pin_to);
        let next_samples: Vec<Vec<Complex64>> = next.iter().map(|s| grid.sample(s)).collect();
        let inc = (0..n)
            .map(|a| PolarGrid::sup_distance(&next_samples[a], &samples[a]))
            .fold(0.0, f64::max);
        if let Some(&prev) = increments.last() {
            if inc > prev {
                growth += 1;
            } else {
                growth = 0;
            }
        }
        increments.push(inc);
        comps = next;
        samples = next_samples;
        iterations += 1;
        if !inc.is_finite() {
            return Err(crate::Error::Convergence { reason: "non-finite iterate".into(), residual: inc });
        }
        if inc < cfg.tol {
            break;
        }
        if growth >= cfg.growth_limit {
            return Err(crate::Error::Convergence {
                reason: format!("increments grew over {} consecutive steps", cfg.growth_limit),
                residual: inc,
            });
        }
        if iterations >= cfg.max_iter {
            return Err(crate::Error::Convergence {
                reason: format!("no convergence in {} iterations", cfg.max_iter),
                residual: inc,
            });
        }
    }
    let disc = Disc::new(comps, grid);
    let residual = equation_residual(q, lambda, &disc, grid)?;
    Ok(JDiscSolution { disc, iterations, increments, residual, q_sup: qsup })
}

/// `sup |∂bar f + q(λ, f) conj(∂f)|` over grid nodes, derivatives taken on
/// coefficients.
pub fn equation_residual(q: &DeformationTensor, lambda: f64, disc: &Disc, grid: &PolarGrid) -> Result<f64> {
    let n = disc.n();
    let dbar: Vec<Vec<Complex64>> = disc.dbar().iter().map(|s| grid.sample(s)).collect();
    let del: Vec<Vec<Complex64>> = disc.del().iter().map(|s| grid.sample(s)).collect();
    let (g, _) = rhs(q, lambda, disc.samples(), &del, grid.len())?;
    let mut worst = 0.0f64;
    for a in 0..n {
        worst = worst.max(PolarGrid::sup_distance(&dbar[a], &g[a]));
    }
    Ok(worst)
}

/// Residual of `df ∘ J_st = J(f) df` at a point, by central differences of
/// the disc; independent of the complex form of the equation.
pub fn structure_residual_fd(j: &StructureField, disc: &Disc, zeta: Complex64, h: f64) -> f64 {
    let fx: Vec<f64> = disc
        .eval_real(zeta + h)
        .iter()
        .zip(disc.eval_real(zeta - h))
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect();
    let i = Complex64::new(0.0, h);
    let fy: Vec<f64> = disc
        .eval_real(zeta + i)
        .iter()
        .zip(disc.eval_real(zeta - i))
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect();
    let jm = j.matrix(&disc.eval_real(zeta));
    let jfx = &jm * nalgebra::DVector::from_column_slice(&fx);
    jfx.iter().zip(&fy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
