//! Discs on the unit disc `Δ`: truncated series in `ζ, ζbar`, a polar
//! quadrature grid, and the Cauchy-Green transform.
//!
//! The transform is applied spectrally: a grid function is fitted per
//! Fourier mode by radial least squares onto `ζ^j ζbar^k`, and each monomial
//! is mapped by the closed form
//! `T(ζ^j ζbar^k) = (ζ^j ζbar^(k+1) - [j > k] ζ^(j-k-1)) / (k+1)`.
//! [`cauchy_green_at`] evaluates the singular integral directly and serves
//! as an independent check.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{err, Result};
use crate::math::{cos, sin, sqrt, PI};

mod equation;
mod flatten;
mod reflect;
mod rh;

pub use equation::{
    equation_residual, solve_j_disc, solve_j_disc_pinned, structure_residual_fd, tensor_of_matrix,
    DeformationTensor, JDiscSolution, PicardConfig, Pin,
};
pub use flatten::{flatten_totally_real, FlatteningMap, GraphData, LocalChart};
pub use reflect::{reflect, ReflectedDisc, ReflectionReport};
pub use rh::{
    bishop_family, linearized_rh_operator, torus_data, BishopConfig, BishopSolution,
    RhOperator, RiemannHilbertData,
};

pub const DEFAULT_ORDER: usize = 16;
pub const DEFAULT_NR: usize = 64;
pub const DEFAULT_NTHETA: usize = 128;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Truncated series `sum c_jk ζ^j ζbar^k` with `j + k <= order`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    order: usize,
    c: Vec<Complex64>,
}

impl Series {
    pub fn zero(order: usize) -> Self {
        Series { order, c: vec![Complex64::new(0.0, 0.0); (order + 1) * (order + 1)] }
    }

    /// Holomorphic series from Taylor coefficients `a_0, a_1, ...`.
    pub fn holomorphic(order: usize, taylor: &[Complex64]) -> Self {
        let mut s = Series::zero(order.max(taylor.len().saturating_sub(1)));
        for (j, &a) in taylor.iter().enumerate() {
            s.set(j, 0, a);
        }
        s
    }

    pub fn monomial(order: usize, j: usize, k: usize, c: Complex64) -> Self {
        let mut s = Series::zero(order.max(j + k));
        s.set(j, k, c);
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn idx(&self, j: usize, k: usize) -> usize {
        j * (self.order + 1) + k
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        if j + k > self.order {
            return Complex64::new(0.0, 0.0);
        }
        self.c[self.idx(j, k)]
    }

    pub fn set(&mut self, j: usize, k: usize, v: Complex64) {
        assert!(j + k <= self.order, "monomial ({j},{k}) beyond order {}", self.order);
        let i = self.idx(j, k);
        self.c[i] = v;
    }

    fn add_at(&mut self, j: usize, k: usize, v: Complex64) {
        let i = self.idx(j, k);
        self.c[i] += v;
    }

    /// Non-zero coefficients as `(j, k, c)`, ordered by `(j, k)`.
    pub fn coefficients(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for j in 0..=self.order {
            for k in 0..=(self.order - j) {
                let v = self.get(j, k);
                if v.re != 0.0 || v.im != 0.0 {
                    out.push((j, k, v));
                }
            }
        }
        out
    }

    /// Taylor coefficients of the `k = 0` column.
    pub fn holomorphic_part(&self) -> Vec<Complex64> {
        (0..=self.order).map(|j| self.get(j, 0)).collect()
    }

    pub fn with_order(&self, order: usize) -> Self {
        let mut s = Series::zero(order);
        for j in 0..=self.order.min(order) {
            for k in 0..=(order.min(self.order) - j) {
                s.set(j, k, self.get(j, k));
            }
        }
        s
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let n = self.order;
        let mut zp = vec![Complex64::new(1.0, 0.0); n + 1];
        let mut wp = vec![Complex64::new(1.0, 0.0); n + 1];
        let zb = z.conj();
        for k in 1..=n {
            zp[k] = zp[k - 1] * z;
            wp[k] = wp[k - 1] * zb;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            let mut row = Complex64::new(0.0, 0.0);
            for k in 0..=(n - j) {
                row += self.c[j * (n + 1) + k] * wp[k];
            }
            acc += row * zp[j];
        }
        acc
    }

    /// `∂/∂ζ`, exact on coefficients.
    pub fn del(&self) -> Self {
        let mut s = Series::zero(self.order);
        for j in 1..=self.order {
            for k in 0..=(self.order - j) {
                s.set(j - 1, k, self.get(j, k) * j as f64);
            }
        }
        s
    }

    /// `∂/∂ζbar`, exact on coefficients.
    pub fn dbar(&self) -> Self {
        let mut s = Series::zero(self.order);
        for j in 0..=self.order {
            for k in 1..=(self.order - j) {
                s.set(j, k - 1, self.get(j, k) * k as f64);
            }
        }
        s
    }

    pub fn conj(&self) -> Self {
        let mut s = Series::zero(self.order);
        for j in 0..=self.order {
            for k in 0..=(self.order - j) {
                s.set(k, j, self.get(j, k).conj());
            }
        }
        s
    }

    pub fn add(&self, o: &Self) -> Self {
        let order = self.order.max(o.order);
        let mut s = self.with_order(order);
        for (j, k, v) in o.coefficients() {
            s.add_at(j, k, v);
        }
        s
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Series { order: self.order, c: self.c.iter().map(|v| v * a).collect() }
    }

    /// Product truncated to `order`.
    pub fn mul(&self, o: &Self, order: usize) -> Self {
        let mut s = Series::zero(order);
        for (j1, k1, a) in self.coefficients() {
            for (j2, k2, b) in o.coefficients() {
                if j1 + j2 + k1 + k2 <= order {
                    s.add_at(j1 + j2, k1 + k2, a * b);
                }
            }
        }
        s
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.c.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Exact Cauchy-Green transform of the series; raises the order by one.
    pub fn cauchy_green(&self) -> Self {
        let mut s = Series::zero(self.order + 1);
        for (j, k, v) in self.coefficients() {
            let w = v / (k + 1) as f64;
            s.add_at(j, k + 1, w);
            if j > k {
                s.add_at(j - k - 1, 0, -w);
            }
        }
        s
    }
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { t } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * pn - pm) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (b - a) * t + 0.5 * (b + a);
        w[i] = (b - a) / ((1.0 - t * t) * dp * dp);
    }
    x.reverse();
    w.reverse();
    (x, w)
}

/// Tensor polar grid: Gauss-Legendre in `r` on `[0, 1]`, uniform in `θ`,
/// with cached per-mode radial least-squares fits of degree `order - 1`.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    nr: usize,
    ntheta: usize,
    order: usize,
    r: Vec<f64>,
    w: Vec<f64>,
    phase: Vec<Complex64>,
    pinv: Vec<DMatrix<f64>>,
}

impl PolarGrid {
    /// Grid whose fitted transforms have order `order`.
    pub fn new(nr: usize, ntheta: usize, order: usize) -> Result<Self> {
        if order < 1 {
            return Err(err!(Parameter, "order must be at least 1"));
        }
        let deg = order - 1;
        if ntheta < 2 * deg + 2 {
            return Err(err!(Parameter, "ntheta = {ntheta} aliases modes of degree {deg}"));
        }
        if nr < deg / 2 + 2 {
            return Err(err!(Parameter, "nr = {nr} too small for degree {deg}"));
        }
        let (r, w) = gauss_legendre(nr, 0.0, 1.0);
        let phase = (0..ntheta)
            .map(|l| {
                let t = 2.0 * PI * l as f64 / ntheta as f64;
                Complex64::new(cos(t), sin(t))
            })
            .collect();
        let mut pinv = Vec::with_capacity(deg + 1);
        for m in 0..=deg {
            let cols = (deg - m) / 2 + 1;
            let b = DMatrix::from_fn(nr, cols, |i, l| {
                sqrt(w[i] * r[i]) * crate::math::powi(r[i], (m + 2 * l) as i32)
            });
            let p = b
                .pseudo_inverse(1e-14)
                .map_err(|e| err!(Parameter, "radial fit for mode {m}: {e}"))?;
            pinv.push(p);
        }
        Ok(PolarGrid { nr, ntheta, order, r, w, phase, pinv })
    }

    pub fn default_grid() -> Self {
        PolarGrid::new(DEFAULT_NR, DEFAULT_NTHETA, DEFAULT_ORDER).expect("default grid is valid")
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    /// Order of transformed series; fits use degree `order - 1`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nr * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    /// Node `i * ntheta + l` is `r_i e^{i θ_l}`.
    pub fn point(&self, idx: usize) -> Complex64 {
        self.phase[idx % self.ntheta] * self.r[idx / self.ntheta]
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Quadrature weight of node `idx` for `∫∫_Δ dA`.
    pub fn area_weight(&self, idx: usize) -> f64 {
        let i = idx / self.ntheta;
        self.w[i] * self.r[i] * 2.0 * PI / self.ntheta as f64
    }

    /// `m` equispaced points on the unit circle.
    pub fn circle(m: usize) -> Vec<Complex64> {
        (0..m)
            .map(|l| {
                let t = 2.0 * PI * l as f64 / m as f64;
                Complex64::new(cos(t), sin(t))
            })
            .collect()
    }

    pub fn sample(&self, s: &Series) -> Vec<Complex64> {
        // per-mode radial polynomials, then a sum over θ
        let n = s.order();
        let modes = 2 * n + 1;
        let mut radial = vec![Complex64::new(0.0, 0.0); self.nr * modes];
        for (j, k, v) in s.coefficients() {
            let m = j as isize - k as isize + n as isize;
            for i in 0..self.nr {
                radial[i * modes + m as usize] += v * crate::math::powi(self.r[i], (j + k) as i32);
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for i in 0..self.nr {
            for l in 0..self.ntheta {
                let mut acc = Complex64::new(0.0, 0.0);
                for mi in 0..modes {
                    let c = radial[i * modes + mi];
                    if c.re == 0.0 && c.im == 0.0 {
                        continue;
                    }
                    let m = mi as isize - n as isize;
                    let idx = (m * l as isize).rem_euclid(self.ntheta as isize) as usize;
                    acc += c * self.phase[idx];
                }
                out[i * self.ntheta + l] = acc;
            }
        }
        out
    }

    /// Least-squares fit of grid values onto `ζ^j ζbar^k`, `j + k <= order - 1`.
    pub fn fit(&self, values: &[Complex64]) -> Result<Series> {
        if values.len() != self.len() {
            return Err(err!(Input, "expected {} grid values, got {}", self.len(), values.len()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(err!(Input, "non-finite grid sample"));
        }
        let deg = self.order - 1;
        let mut s = Series::zero(deg);
        let inv_nt = 1.0 / self.ntheta as f64;
        for m in -(deg as isize)..=(deg as isize) {
            let am = m.unsigned_abs();
            // Fourier coefficient of mode m on each ring, weighted
            let mut rhs_re = DVector::zeros(self.nr);
            let mut rhs_im = DVector::zeros(self.nr);
            for i in 0..self.nr {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..self.ntheta {
                    let idx = (-m * l as isize).rem_euclid(self.ntheta as isize) as usize;
                    acc += values[i * self.ntheta + l] * self.phase[idx];
                }
                let wt = sqrt(self.w[i] * self.r[i]) * inv_nt;
                rhs_re[i] = acc.re * wt;
                rhs_im[i] = acc.im * wt;
            }
            let a_re = &self.pinv[am] * rhs_re;
            let a_im = &self.pinv[am] * rhs_im;
            for l in 0..a_re.len() {
                let tot = am + 2 * l;
                let j = ((tot as isize + m) / 2) as usize;
                let k = ((tot as isize - m) / 2) as usize;
                s.set(j, k, Complex64::new(a_re[l], a_im[l]));
            }
        }
        Ok(s)
    }

    pub fn sup_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
}

/// `T_Δ(g)` for a grid function `g`.
pub fn cauchy_green(grid: &PolarGrid, g: &[Complex64]) -> Result<Series> {
    Ok(grid.fit(g)?.cauchy_green())
}

/// `h0 + T_Δ(g)` and the sampled residual `sup |∂bar h - g|`.
pub fn dbar_solve(grid: &PolarGrid, g: &[Complex64], h0: &[Complex64]) -> Result<(Series, f64)> {
    let t = cauchy_green(grid, g)?;
    let h = t.add(&Series::holomorphic(grid.order(), h0));
    let res = PolarGrid::sup_distance(&grid.sample(&h.dbar()), g);
    Ok((h, res))
}

/// Direct quadrature of the Cauchy-Green integral at `τ`, desingularized as
/// `-(1/π) ∫∫ (g(ζ) - g(τ)) / (ζ - τ) dA + g(τ) τbar`.
pub fn cauchy_green_at(grid: &PolarGrid, g: &dyn Fn(Complex64) -> Complex64, tau: Complex64) -> Complex64 {
    let gt = g(tau);
    let mut acc = Complex64::new(0.0, 0.0);
    for idx in 0..grid.len() {
        let z = grid.point(idx);
        let d = z - tau;
        if d.norm() < 1e-14 {
            continue;
        }
        acc += (g(z) - gt) / d * grid.area_weight(idx);
    }
    -acc / PI + gt * tau.conj()
}

/// A map `Δ -> C^n` given by one series per complex component, with its
/// samples on a polar grid.
#[derive(Debug, Clone)]
pub struct Disc {
    comps: Vec<Series>,
    shape: (usize, usize),
    samples: Vec<Vec<Complex64>>,
}

impl Disc {
    pub fn new(comps: Vec<Series>, grid: &PolarGrid) -> Self {
        let samples = comps.iter().map(|s| grid.sample(s)).collect();
        Disc { comps, shape: (grid.nr(), grid.ntheta()), samples }
    }

    /// Holomorphic disc with Taylor coefficients per component.
    pub fn holomorphic(taylor: &[Vec<Complex64>], grid: &PolarGrid) -> Self {
        let comps = taylor.iter().map(|t| Series::holomorphic(grid.order(), t)).collect();
        Disc::new(comps, grid)
    }

    /// Complex dimension `n`.
    pub fn n(&self) -> usize {
        self.comps.len()
    }

    /// Real dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.comps.len()
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(|s| s.order()).max().unwrap_or(0)
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn components(&self) -> &[Series] {
        &self.comps
    }

    pub fn component(&self, a: usize) -> &Series {
        &self.comps[a]
    }

    pub fn samples(&self) -> &[Vec<Complex64>] {
        &self.samples
    }

    pub fn eval(&self, z: Complex64) -> Vec<Complex64> {
        self.comps.iter().map(|s| s.eval(z)).collect()
    }

    /// Value as interleaved real coordinates `(x1, y1, x2, y2, ...)`.
    pub fn eval_real(&self, z: Complex64) -> Vec<f64> {
        to_real(&self.eval(z))
    }

    pub fn del(&self) -> Vec<Series> {
        self.comps.iter().map(|s| s.del()).collect()
    }

    pub fn dbar(&self) -> Vec<Series> {
        self.comps.iter().map(|s| s.dbar()).collect()
    }

    /// Largest gap between stored samples and direct evaluation.
    pub fn sample_consistency(&self, grid: &PolarGrid) -> f64 {
        let mut worst = 0.0f64;
        for (a, s) in self.comps.iter().enumerate() {
            for idx in 0..grid.len() {
                worst = worst.max((s.eval(grid.point(idx)) - self.samples[a][idx]).norm());
            }
        }
        worst
    }
}

pub fn to_real(z: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * z.len());
    for v in z {
        out.push(v.re);
        out.push(v.im);
    }
    out
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// `∂bar` by central differences in `x, y` at `z`.
pub fn fd_dbar(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> Complex64 {
    let fx = (f(z + h) - f(z - h)) / (2.0 * h);
    let fy = (f(z + I * h) - f(z - I * h)) / (2.0 * h);
    (fx + I * fy) * 0.5
}

/// `∂` by central differences in `x, y` at `z`.
pub fn fd_del(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> Complex64 {
    let fx = (f(z + h) - f(z - h)) / (2.0 * h);
    let fy = (f(z + I * h) - f(z - I * h)) / (2.0 * h);
    (fx - I * fy) * 0.5
}
