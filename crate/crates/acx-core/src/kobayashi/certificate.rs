//! Lower bounds for the metric: plurisubharmonic weight certificates and,
//! for the standard structure, inclusion in a ball or a half-space.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::boundary::{boundary_samples, level_set_foot, outward_normal, sphere_directions};
use super::MetricQuery;
use crate::disc::Disc;
use crate::error::{err, Result};
use crate::field::{c2_distance_to_const, for_each_grid_point, j_st, BoxDomain, ScalarField, StructureField};
use crate::linalg::conjugator_to_standard;
use crate::math::{exp, log, sqrt};
use crate::structure::{levi_matrix, levi_matrix_from_jet, psh_defining_function};

/// Smooth nondecreasing `θ_r` with `θ_r(s) = s` for `s <= r/3` and
/// `θ_r(s) = 1` for `s >= 2r/3`; quintic Hermite in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub r: f64,
}

impl Cutoff {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(err!(Parameter, "cutoff parameter r must lie in (0, 1), got {r}"));
        }
        Ok(Self { r })
    }

    /// `(θ, θ', θ'')` at `s`.
    pub fn jet(&self, s: f64) -> (f64, f64, f64) {
        let a = self.r / 3.0;
        let b = 2.0 * self.r / 3.0;
        if s <= a {
            return (s, 1.0, 0.0);
        }
        if s >= b {
            return (1.0, 0.0, 0.0);
        }
        let h = b - a;
        let t = (s - a) / h;
        let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
        // Hermite data: p(0) = a, p'(0) = h, p(1) = 1, second derivatives 0
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let d00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let d10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let d01 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
        let e00 = -60.0 * t + 180.0 * t2 - 120.0 * t3;
        let e10 = -36.0 * t + 96.0 * t2 - 60.0 * t3;
        let e01 = 60.0 * t - 180.0 * t2 + 120.0 * t3;
        let v = a * h00 + h * h10 + h01;
        let d1 = (a * d00 + h * d10 + d01) / h;
        let d2 = (a * e00 + h * e10 + e01) / (h * h);
        (v, d1, d2)
    }
}

/// Chart `w = L (z - q)` with `L J(q) L^{-1} = J_st`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartData {
    pub center: Vec<f64>,
    pub linear: DMatrix<f64>,
    /// Sampled `||L_* J - J_st||_{C^2}` on the unit ball of the chart.
    pub c2_residual: f64,
}

impl ChartData {
    pub fn new(j: &StructureField, q: &[f64]) -> Result<Self> {
        let l = conjugator_to_standard(&j.matrix(q))
            .ok_or_else(|| err!(Degenerate, "J(q) cannot be conjugated to J_st"))?;
        let shift: Vec<f64> = (-(&l * DVector::from_column_slice(q))).iter().copied().collect();
        let pushed = j.push_affine(&l, &shift)?;
        let c2_residual = c2_distance_to_const(&pushed, &j_st(j.dim()), 1.0, true, 5);
        Ok(Self { center: q.to_vec(), linear: l, c2_residual })
    }

    pub fn apply(&self, z: &[f64]) -> DVector<f64> {
        let d = DVector::from_iterator(z.len(), z.iter().zip(&self.center).map(|(a, b)| a - b));
        &self.linear * d
    }

    /// Gradient and Hessian of `G(|w|^2)` given `(G', G'')` at `s = |w|^2`.
    fn radial_jet(&self, z: &[f64], g1: f64, g2: f64) -> (DVector<f64>, DMatrix<f64>) {
        let w = self.apply(z);
        let m = self.linear.transpose() * &self.linear;
        let ds = self.linear.transpose() * &w * 2.0;
        let grad = &ds * g1;
        let hess = &m * (2.0 * g1) + &ds * ds.transpose() * g2;
        (grad, hess)
    }

    /// `|w|^2` as a scalar field.
    pub fn abs2_field(&self) -> ScalarField {
        let c = self.clone();
        let (c1, c2) = (self.clone(), self.clone());
        ScalarField::from_oracles(
            self.center.len(),
            move |z| c.apply(z).norm_squared(),
            move |z| c1.radial_jet(z, 1.0, 0.0).0,
            move |z| c2.radial_jet(z, 1.0, 0.0).1,
        )
    }
}

/// The three Levi matrices whose combination is the Levi matrix of the
/// weight `log θ(|w|^2) + θ(A |w|) + B |w|^2`, at one sample point.
struct WeightSample {
    log_part: DMatrix<f64>,
    abs2: DMatrix<f64>,
    s: f64,
    jm: DMatrix<f64>,
    dj: Vec<DMatrix<f64>>,
    z: Vec<f64>,
}

fn weight_samples(j: &StructureField, chart: &ChartData, cut: &Cutoff) -> Result<Vec<WeightSample>> {
    let dim = j.dim();
    let linv = chart
        .linear
        .clone()
        .try_inverse()
        .ok_or_else(|| err!(Degenerate, "chart map is singular"))?;
    let dirs = sphere_directions(dim, if dim == 2 { 32 } else { 48 });
    let mut out = Vec::with_capacity(100 * dirs.len());
    for k in 1..=100 {
        let rad = 0.01 * k as f64;
        for d in &dirs {
            let w = DVector::from_column_slice(d) * rad;
            let z: Vec<f64> = (&linv * w).iter().zip(&chart.center).map(|(a, b)| a + b).collect();
            let s = rad * rad;
            let jm = j.matrix(&z);
            let dj = j.derivatives(&z);
            let (t, t1, t2) = cut.jet(s);
            let (g, h) = chart.radial_jet(&z, t1 / t, t2 / t - t1 * t1 / (t * t));
            let log_part = levi_matrix_from_jet(&jm, &dj, &g, &h) * 0.25;
            let (g, h) = chart.radial_jet(&z, 1.0, 0.0);
            let abs2 = levi_matrix_from_jet(&jm, &dj, &g, &h) * 0.25;
            out.push(WeightSample { log_part, abs2, s, jm, dj, z });
        }
    }
    Ok(out)
}

impl WeightSample {
    /// Levi matrix of `θ(A sqrt(s))`.
    fn a_part(&self, chart: &ChartData, cut: &Cutoff, a: f64) -> DMatrix<f64> {
        let rt = sqrt(self.s);
        let (_, t1, t2) = cut.jet(a * rt);
        // d/ds θ(A sqrt s) and second derivative
        let g1 = t1 * a / (2.0 * rt);
        let g2 = t2 * a * a / (4.0 * self.s) - t1 * a / (4.0 * self.s * rt);
        let (g, h) = chart.radial_jet(&self.z, g1, g2);
        levi_matrix_from_jet(&self.jm, &self.dj, &g, &h) * 0.25
    }
}

/// Smallest `B` making `P + B S` positive semidefinite, where `S` is
/// positive definite; infinite otherwise.
fn min_shift(p: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    let Some(ch) = s.clone().cholesky() else { return f64::INFINITY };
    let l = ch.l();
    let Some(linv) = l.try_inverse() else { return f64::INFINITY };
    let m = &linv * p * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mx = m.symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |a, &e| a.min(e));
    -mx
}

/// Sampled minimum of the Levi form of the weight over unit vectors on
/// the grid `|w| = 0.01 k`, `k = 1..=100`.
pub fn chirka_min_levi(j: &StructureField, chart: &ChartData, a: f64, b: f64, r: f64) -> Result<f64> {
    let cut = Cutoff::new(r)?;
    let mut worst = f64::INFINITY;
    for s in weight_samples(j, chart, &cut)? {
        let m = &s.log_part + s.a_part(chart, &cut, a) + &s.abs2 * b;
        worst = worst.min(crate::linalg::min_eigenvalue(&m));
    }
    Ok(worst)
}

/// Log-spaced grid of `count` values on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| exp(log(lo) + (log(hi) - log(lo)) * k as f64 / (count - 1).max(1) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirkaConstants {
    pub a: f64,
    pub b: f64,
    pub r: f64,
}

/// Grid search over `A, B` in `[1e-2, 1e2]` for a weight with sampled
/// nonnegative Levi form; among admissible pairs the one maximizing
/// `c' = sqrt(c / (2 B exp(1 + A C')))` is returned.
pub fn chirka_search(j: &StructureField, chart: &ChartData, r: f64, diameter: f64) -> Result<ChirkaConstants> {
    let cut = Cutoff::new(r)?;
    let samples = weight_samples(j, chart, &cut)?;
    let b_grid = log_grid(1e-2, 1e2, 81);
    let mut best: Option<(f64, ChirkaConstants)> = None;
    for a in log_grid(1e-2, 1e2, 41) {
        let mut need = 0.0f64;
        for s in &samples {
            let p = &s.log_part + s.a_part(chart, &cut, a);
            need = need.max(min_shift(&p, &s.abs2));
            if need > 1e2 {
                break;
            }
        }
        let Some(&b) = b_grid.iter().find(|&&b| b >= need * (1.0 + 1e-9)) else { continue };
        let cost = log(b) + a * diameter;
        if best.map(|(c, _)| cost < c).unwrap_or(true) {
            best = Some((cost, ChirkaConstants { a, b, r }));
        }
    }
    best.map(|(_, c)| c)
        .ok_or_else(|| err!(CertificateRejected, "no weight constants in [1e-2, 1e2] pass the sampled Levi test"))
}

/// Weight certificate for the lower bound `c' ||v|| / |u(q)|^(1/2)`.
#[derive(Debug, Clone)]
pub struct PshCertificate {
    pub u: ScalarField,
    pub c: f64,
    pub l: f64,
    pub a: f64,
    pub b: f64,
    /// `2B / c`.
    pub tau: f64,
    pub r: f64,
    /// Sampled `sup_D |w|`.
    pub diameter: f64,
    pub chart: ChartData,
}

impl PshCertificate {
    /// `sqrt(c / (2 B exp(1 + A C')))`.
    pub fn constant(&self) -> f64 {
        sqrt(self.c / (2.0 * self.b * exp(1.0 + self.a * self.diameter)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateConfig {
    pub r: f64,
    /// Candidate `C` in `ρ + C ρ^2`, tried in order.
    pub psh_c: Vec<f64>,
    /// Grid points per axis for sampling `D` (defaults by dimension).
    pub per_axis: Option<usize>,
    /// Levi values above `-levi_tol` count as nonnegative.
    pub levi_tol: f64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        CertificateConfig { r: 0.9, psh_c: vec![0.0, 0.5, 1.0, 2.0], per_axis: None, levi_tol: 1e-9 }
    }
}

/// Tensor-grid samples of `D`.
pub fn domain_samples(domain: &BoxDomain, per_axis: Option<usize>) -> Vec<Vec<f64>> {
    let dim = domain.dim;
    let n = per_axis.unwrap_or(if dim == 2 { 41 } else { 13 });
    let mut out = Vec::new();
    let mid: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = domain.lo.iter().zip(&domain.hi).map(|(a, b)| 0.5 * (b - a)).collect();
    // unit-cube grid mapped onto the box
    for_each_grid_point(dim, n, 1.0, |x| {
        let z: Vec<f64> = x.iter().enumerate().map(|(i, t)| mid[i] + half[i] * t).collect();
        if domain.contains(&z) {
            out.push(z);
        }
    });
    out
}

/// Checks `u < 0`, `u >= -L` and Levi positivity of `u - c|w|^2` on the
/// samples, and Levi positivity of the weight.
pub fn verify_certificate(query: &MetricQuery, cert: &PshCertificate, cfg: &CertificateConfig) -> Result<()> {
    let j = &query.structure;
    let abs2 = cert.chart.abs2_field();
    let samples = domain_samples(&query.domain, cfg.per_axis);
    for z in &samples {
        let v = cert.u.value(z);
        if !(v < 0.0) {
            return Err(err!(CertificateRejected, "u = {v:e} is not negative at {:?}", z));
        }
        if v < -cert.l * (1.0 + 1e-12) {
            return Err(err!(CertificateRejected, "u = {v:e} is below -L at {:?}", z));
        }
        let m = levi_matrix(j, &cert.u, z) - levi_matrix(j, &abs2, z) * cert.c;
        let e = crate::linalg::min_eigenvalue(&m);
        if e < -cfg.levi_tol {
            return Err(err!(CertificateRejected, "Levi form of u - c|w|^2 is {e:e} at {:?}", z));
        }
    }
    let e = chirka_min_levi(j, &cert.chart, cert.a, cert.b, cert.r)?;
    if e < -cfg.levi_tol {
        return Err(err!(CertificateRejected, "weight Levi form reaches {e:e}"));
    }
    Ok(())
}

/// `c' ||L v|| / |u(q)|^(1/2)` after verifying the certificate.
pub fn kr_lower_certificate(query: &MetricQuery, cert: &PshCertificate, cfg: &CertificateConfig) -> Result<f64> {
    verify_certificate(query, cert, cfg)?;
    let lv = &cert.chart.linear * DVector::from_column_slice(&query.vector);
    let uq = cert.u.value(&query.point);
    Ok(cert.constant() * lv.norm() / sqrt(uq.abs()))
}

/// Builds a certificate with `u = ρ + C ρ^2` for the first admissible `C`.
pub fn auto_certificate(query: &MetricQuery, cfg: &CertificateConfig) -> Result<PshCertificate> {
    let rho = query
        .domain
        .defining
        .as_ref()
        .ok_or_else(|| err!(Parameter, "certificates need a defining function"))?;
    let j = &query.structure;
    let chart = ChartData::new(j, &query.point)?;
    let abs2 = chart.abs2_field();
    let samples = domain_samples(&query.domain, cfg.per_axis);
    if samples.is_empty() {
        return Err(err!(CertificateRejected, "no samples of D"));
    }
    let diameter = samples.iter().map(|z| chart.apply(z).norm()).fold(0.0, f64::max);
    let consts = chirka_search(j, &chart, cfg.r, diameter)?;
    let mut last = String::from("no candidate");
    for &cc in &cfg.psh_c {
        let u = psh_defining_function(rho, cc);
        let mut c = f64::INFINITY;
        let mut l = 0.0f64;
        let mut ok = true;
        for z in &samples {
            let v = u.value(z);
            if !(v < 0.0) {
                ok = false;
                break;
            }
            l = l.max(-v);
            c = c.min(min_ratio(&levi_matrix(j, &u, z), &levi_matrix(j, &abs2, z)));
        }
        if !ok || !(c > 0.0) {
            last = alloc::format!("C = {cc}: u not negative or not strictly psh");
            continue;
        }
        let c = c * (1.0 - 1e-6);
        let cert = PshCertificate {
            u,
            c,
            l: l * (1.0 + 1e-9),
            a: consts.a,
            b: consts.b,
            tau: 2.0 * consts.b / c,
            r: consts.r,
            diameter,
            chart: chart.clone(),
        };
        match verify_certificate(query, &cert, cfg) {
            Ok(()) => return Ok(cert),
            Err(e) => last = alloc::format!("{e}"),
        }
    }
    Err(err!(CertificateRejected, "{last}"))
}

/// Smallest generalized eigenvalue of `(P, S)` with `S` positive definite.
fn min_ratio(p: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    -min_shift(p, s)
}

/// Lower bounds by inclusion, valid for `J = J_st` only.
#[derive(Debug, Clone, PartialEq)]
pub enum InclusionBound {
    /// `D ⊂ B(center, radius)`: the ball metric bounds `K_D` from below.
    Ball { center: Vec<f64>, radius: f64, value: f64 },
    /// `D ⊂ {(z - point) . normal < 0}`: projecting to a half-plane.
    HalfSpace { point: Vec<f64>, normal: Vec<f64>, value: f64 },
}

impl InclusionBound {
    pub fn value(&self) -> f64 {
        match self {
            InclusionBound::Ball { value, .. } | InclusionBound::HalfSpace { value, .. } => *value,
        }
    }
}

fn to_c(x: &[f64]) -> Vec<Complex64> {
    x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// Kobayashi-Royden metric of the ball `B(m, R)` for `J_st`.
pub fn ball_metric(center: &[f64], radius: f64, p: &[f64], v: &[f64]) -> Result<f64> {
    let pc: Vec<Complex64> = to_c(p).iter().zip(to_c(center)).map(|(a, b)| (a - b) / radius).collect();
    let vc: Vec<Complex64> = to_c(v).iter().map(|a| a / radius).collect();
    let p2: f64 = pc.iter().map(|z| z.norm_sqr()).sum();
    if p2 >= 1.0 {
        return Err(err!(Domain, "point is not inside the ball"));
    }
    let v2: f64 = vc.iter().map(|z| z.norm_sqr()).sum();
    let inner: Complex64 = pc.iter().zip(&vc).map(|(a, b)| a.conj() * b).sum();
    let d = 1.0 - p2;
    Ok(sqrt(v2 / d + inner.norm_sqr() / (d * d)))
}

fn is_standard(j: &StructureField, samples: &[Vec<f64>]) -> bool {
    let js = j_st(j.dim());
    if let Some(p) = j.as_poly() {
        return p.entries().iter().all(|e| e.degree() == 0) && (p.eval(&vec![0.0; j.dim()]) - js).amax() == 0.0;
    }
    samples.iter().all(|z| (j.matrix(z) - &js).amax() < 1e-14)
}

/// Ball and half-space inclusion bounds for `J = J_st`; empty for other
/// structures or when no candidate contains the sampled domain.
pub fn inclusion_bounds(query: &MetricQuery, rays: usize, per_axis: Option<usize>) -> Result<Vec<InclusionBound>> {
    let samples = domain_samples(&query.domain, per_axis);
    if !is_standard(&query.structure, &samples) || samples.is_empty() {
        return Ok(Vec::new());
    }
    let dim = query.domain.dim;
    let q = &query.point;
    let v = &query.vector;
    let mut centroid = vec![0.0; dim];
    for z in &samples {
        for (c, x) in centroid.iter_mut().zip(z) {
            *c += x / samples.len() as f64;
        }
    }
    let mut out = Vec::new();
    let mut all_bdry: Vec<Vec<f64>> = Vec::new();
    for m in [centroid, q.clone()] {
        if !query.domain.contains(&m) {
            continue;
        }
        let bdry = boundary_samples(&query.domain, &m, rays)?;
        let radius = bdry
            .iter()
            .map(|b| crate::linalg::norm2(&b.iter().zip(&m).map(|(x, y)| x - y).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        if let Ok(value) = ball_metric(&m, radius, q, v) {
            out.push(InclusionBound::Ball { center: m, radius, value });
        }
        all_bdry.extend(bdry);
    }
    if let Some(rho) = &query.domain.defining {
        let (dist, foot) = level_set_foot(rho, q)?;
        let nu = outward_normal(rho, &foot)?;
        let below = |z: &Vec<f64>| z.iter().zip(&foot).zip(&nu).map(|((a, b), n)| (a - b) * n).sum::<f64>() <= 1e-12;
        if dist > 0.0 && samples.iter().all(below) && all_bdry.iter().all(below) {
            let pv: Complex64 = to_c(&nu).iter().zip(to_c(v)).map(|(n, x)| n.conj() * x).sum();
            let depth: f64 = q.iter().zip(&foot).zip(&nu).map(|((a, b), n)| (b - a) * n).sum();
            out.push(InclusionBound::HalfSpace {
                point: foot,
                normal: nu,
                value: pv.norm() / (2.0 * depth),
            });
        }
    }
    Ok(out)
}

/// Whether `f(sΔ)` stays in `D` and in the unit ball of the chart.
pub fn localization_check(domain: &BoxDomain, chart: &ChartData, disc: &Disc, s: f64) -> bool {
    (0..64).all(|k| {
        let t = 2.0 * crate::math::PI * k as f64 / 64.0;
        let z = Complex64::from_polar(s, t);
        let x = disc.eval_real(z);
        domain.contains(&x) && chart.apply(&x).norm() <= 1.0
    })
}
