//! Boundary geometry of sampled domains: boundary points, distances,
//! Hopf-type margins and distance comparability under maps.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{err, Result};
use crate::field::{BoxDomain, ScalarField};
use crate::maps::Diffeo;
use crate::math::{cos, loglog_slope, sin, sqrt, PI};

/// Deterministic unit directions in `R^dim`: evenly spaced angles in the
/// plane, otherwise the signed axes followed by seeded uniform directions.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    if dim == 2 {
        return (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                vec![cos(t), sin(t)]
            })
            .collect();
    }
    let mut out = Vec::with_capacity(count);
    for a in 0..dim {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[a] = s;
            out.push(d);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    while out.len() < count {
        // Box-Muller pairs give rotation-invariant directions
        let mut d = Vec::with_capacity(dim);
        while d.len() < dim {
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            let rad = sqrt(-2.0 * crate::math::log(u1));
            d.push(rad * cos(2.0 * PI * u2));
            d.push(rad * sin(2.0 * PI * u2));
        }
        d.truncate(dim);
        let n = crate::linalg::norm2(&d);
        if n > 1e-8 {
            out.push(d.iter().map(|x| x / n).collect());
        }
    }
    out.truncate(count);
    out
}

fn along(p: &[f64], d: &[f64], s: f64) -> Vec<f64> {
    p.iter().zip(d).map(|(a, b)| a + s * b).collect()
}

/// First exit point of the ray `p + s d`, `s > 0`, from the domain, located
/// by doubling and bisection to `1e-14` relative accuracy.
pub fn ray_exit(domain: &BoxDomain, p: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    if !domain.contains(p) {
        return Err(err!(Domain, "ray start {:?} is not in the domain", p));
    }
    let mut lo = 0.0;
    let mut hi = 1e-3;
    let mut k = 0;
    while domain.contains(&along(p, d, hi)) {
        lo = hi;
        hi *= 2.0;
        k += 1;
        if k > 80 {
            return Err(err!(Degenerate, "ray from {:?} does not leave the domain", p));
        }
    }
    while hi - lo > 1e-14 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if domain.contains(&along(p, d, mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(along(p, d, 0.5 * (lo + hi)))
}

/// Boundary points reached from `center` along [`sphere_directions`].
pub fn boundary_samples(domain: &BoxDomain, center: &[f64], count: usize) -> Result<Vec<Vec<f64>>> {
    sphere_directions(domain.dim, count).iter().map(|d| ray_exit(domain, center, d)).collect()
}

/// Unit outward normal `∇ρ / |∇ρ|`.
pub fn outward_normal(rho: &ScalarField, t: &[f64]) -> Result<Vec<f64>> {
    let g = rho.gradient(t);
    let n = g.norm();
    if n < 1e-12 {
        return Err(err!(Degenerate, "dρ vanishes at {:?}", t));
    }
    Ok((g / n).iter().copied().collect())
}

/// Distance from an interior point to `{ρ = 0}` together with the foot
/// point, by iterating `b <- exit point of p + s n(b)`.
pub fn level_set_foot(rho: &ScalarField, p: &[f64]) -> Result<(f64, Vec<f64>)> {
    if !(rho.value(p) < 0.0) {
        return Err(err!(Domain, "point {:?} is not in {{ρ < 0}}", p));
    }
    let inside = |x: &[f64]| rho.value(x) < 0.0;
    let exit = |dir: &[f64]| -> Result<f64> {
        let mut lo = 0.0;
        let mut hi = 1e-3;
        let mut k = 0;
        while inside(&along(p, dir, hi)) {
            lo = hi;
            hi *= 2.0;
            k += 1;
            if k > 80 {
                return Err(err!(Degenerate, "no boundary along the normal at {:?}", p));
            }
        }
        while hi - lo > 1e-15 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if inside(&along(p, dir, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let mut dir = match outward_normal(rho, p) {
        Ok(d) => d,
        // critical point of ρ: start from the shortest of a few rays
        Err(_) => {
            let mut best = (f64::INFINITY, Vec::new());
            for d in sphere_directions(p.len(), 64) {
                let s = exit(&d)?;
                if s < best.0 {
                    best = (s, d);
                }
            }
            best.1
        }
    };
    let mut foot = p.to_vec();
    for _ in 0..100 {
        foot = along(p, &dir, exit(&dir)?);
        let next = outward_normal(rho, &foot)?;
        let change: f64 = next.iter().zip(&dir).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        dir = next;
        if change < 1e-13 {
            break;
        }
    }
    let d = crate::linalg::norm2(&foot.iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok((d, foot))
}

/// `dist(p, ∂D)` for `D = {ρ < 0} ∩ box`.
pub fn boundary_distance(domain: &BoxDomain, p: &[f64]) -> Result<f64> {
    if !domain.contains(p) {
        return Err(err!(Domain, "point {:?} is not in the domain", p));
    }
    let mut d = f64::INFINITY;
    for i in 0..domain.dim {
        d = d.min(p[i] - domain.lo[i]).min(domain.hi[i] - p[i]);
    }
    if let Some(rho) = &domain.defining {
        d = d.min(level_set_foot(rho, p)?.0);
    }
    Ok(d)
}

/// Point at distance `delta` from `t` along the inner normal.
pub fn inner_point(rho: &ScalarField, t: &[f64], delta: f64) -> Result<Vec<f64>> {
    let n = outward_normal(rho, t)?;
    Ok(along(t, &n, -delta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfConfig {
    pub deltas: Vec<f64>,
    /// Number of boundary rays.
    pub rays: usize,
    /// Ray origin for boundary sampling; the box midpoint when `None`.
    pub center: Option<Vec<f64>>,
    /// Largest tolerated log-log slope of the margin against `δ`.
    pub max_decay_slope: f64,
}

impl Default for HopfConfig {
    fn default() -> Self {
        HopfConfig { deltas: vec![0.1, 0.05, 0.025, 0.0125], rays: 64, center: None, max_decay_slope: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfReport {
    /// `min |u(p)| / dist(p, ∂G)` over rays, per `δ`.
    pub per_delta: Vec<f64>,
    pub margin: f64,
    /// `-max u` over the compact set.
    pub l_on_compact: f64,
    pub decay_slope: f64,
    pub pass: bool,
}

fn center_of(domain: &BoxDomain, c: &Option<Vec<f64>>) -> Vec<f64> {
    c.clone().unwrap_or_else(|| domain.lo.iter().zip(&domain.hi).map(|(a, b)| 0.5 * (a + b)).collect())
}

/// Ratio `|u(p)| / dist(p, ∂G)` along inner normal rays.
pub fn hopf_margin(g: &BoxDomain, u: &ScalarField, compact: &[Vec<f64>], cfg: &HopfConfig) -> Result<HopfReport> {
    let rho = g.defining.as_ref().ok_or_else(|| err!(Parameter, "the domain needs a defining function"))?;
    if cfg.deltas.is_empty() {
        return Err(err!(Parameter, "no distances given"));
    }
    let mut l = f64::INFINITY;
    for z in compact {
        let v = u.value(z);
        if !(v < 0.0) {
            return Err(err!(Precondition, "u = {v:e} is not negative at {:?}", z));
        }
        l = l.min(-v);
    }
    let center = center_of(g, &cfg.center);
    let feet = boundary_samples(g, &center, cfg.rays)?;
    let mut per_delta = Vec::with_capacity(cfg.deltas.len());
    for &delta in &cfg.deltas {
        let mut worst = f64::INFINITY;
        for t in &feet {
            let p = inner_point(rho, t, delta)?;
            let v = u.value(&p);
            if !(v < 0.0) {
                return Err(err!(Precondition, "u = {v:e} is not negative at {:?}", p));
            }
            let d = boundary_distance(g, &p)?;
            worst = worst.min(-v / d);
        }
        per_delta.push(worst);
    }
    let margin = per_delta.iter().copied().fold(f64::INFINITY, f64::min);
    let decay_slope =
        if per_delta.len() > 1 { loglog_slope(&cfg.deltas, &per_delta) } else { 0.0 };
    let pass = margin > 0.0 && decay_slope <= cfg.max_decay_slope;
    Ok(HopfReport { per_delta, margin, l_on_compact: l, decay_slope, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparabilityReport {
    /// `dist(f(z), ∂D') / dist(z, ∂D)` per sample.
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Smallest `C` with all ratios in `[1/C, C]`.
    pub constant: f64,
}

/// Boundary distance ratios under `f` along inner normal rays from the
/// given boundary points of `D`.
pub fn distance_comparability(
    f: &dyn Diffeo,
    d: &BoxDomain,
    d2: &BoxDomain,
    feet: &[Vec<f64>],
    deltas: &[f64],
) -> Result<ComparabilityReport> {
    let rho = d.defining.as_ref().ok_or_else(|| err!(Parameter, "the domain needs a defining function"))?;
    let mut ratios = Vec::new();
    for t in feet {
        for &delta in deltas {
            let p = inner_point(rho, t, delta)?;
            let fp = f.map(&p);
            ratios.push(boundary_distance(d2, &fp)? / boundary_distance(d, &p)?);
        }
    }
    if ratios.is_empty() {
        return Err(err!(Parameter, "no samples"));
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ComparabilityReport { constant: max.max(1.0 / min), ratios, min, max })
}
