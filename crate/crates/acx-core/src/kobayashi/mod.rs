//! Two-sided estimates of the Kobayashi-Royden metric
//! `K(q, v) = inf { α > 0 : f(0) = q, ∂_x f(0) = v / α, f: Δ -> D J-holomorphic }`.
//!
//! Upper bounds come from explicit discs found by bisection in `α`; lower
//! bounds from weight certificates and, for `J_st`, from inclusions.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::disc::{solve_j_disc_pinned, DeformationTensor, Disc, PicardConfig, Pin, PolarGrid};
use crate::error::{err, Result};
use crate::field::{BoxDomain, StructureField};
use crate::math::loglog_slope;
use crate::structure::holomorphic_tangent;

mod anisotropy;
mod boundary;
mod certificate;

pub use anisotropy::{tangent_map_anisotropy, AnisotropyReport, AnisotropySample};
pub use boundary::{
    boundary_distance, boundary_samples, distance_comparability, hopf_margin, inner_point, level_set_foot,
    outward_normal, ray_exit, sphere_directions, ComparabilityReport, HopfConfig, HopfReport,
};
pub use certificate::{
    auto_certificate, ball_metric, chirka_min_levi, chirka_search, domain_samples, inclusion_bounds,
    kr_lower_certificate, localization_check, log_grid, verify_certificate, CertificateConfig, ChartData,
    ChirkaConstants, Cutoff, InclusionBound, PshCertificate,
};

/// A base point and vector in a domain with a structure.
#[derive(Debug, Clone)]
pub struct MetricQuery {
    pub domain: BoxDomain,
    pub structure: StructureField,
    pub point: Vec<f64>,
    pub vector: Vec<f64>,
}

impl MetricQuery {
    /// Requires `q ∈ D`; `v = 0` is allowed (the metric vanishes there).
    pub fn new(domain: BoxDomain, structure: StructureField, point: Vec<f64>, vector: Vec<f64>) -> Result<Self> {
        let dim = domain.dim;
        if structure.dim() != dim || point.len() != dim || vector.len() != dim {
            return Err(err!(Dimension, "query data must all have dimension {dim}"));
        }
        if point.iter().chain(&vector).any(|x| !x.is_finite()) {
            return Err(err!(Input, "non-finite query data"));
        }
        if !domain.contains(&point) {
            return Err(err!(Domain, "base point {:?} is not in the domain", point));
        }
        Ok(Self { domain, structure, point, vector })
    }

    pub fn with_vector(&self, vector: Vec<f64>) -> Result<Self> {
        Self::new(self.domain.clone(), self.structure.clone(), self.point.clone(), vector)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperConfig {
    /// Bisection stops when `hi / lo - 1 < tol`.
    pub tol: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// A disc is feasible when `ρ(f) <= -margin` on all samples.
    pub margin: f64,
    pub order: usize,
    pub nr: usize,
    pub ntheta: usize,
    /// Points on `|ζ| = 1` added to the grid samples.
    pub boundary_samples: usize,
    pub picard: PicardConfig,
}

impl Default for UpperConfig {
    fn default() -> Self {
        UpperConfig {
            tol: 1e-6,
            alpha_min: 1e-6,
            alpha_max: 1e6,
            margin: 1e-6,
            order: 12,
            nr: 24,
            ntheta: 48,
            boundary_samples: 256,
            picard: PicardConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UpperBound {
    pub value: f64,
    pub disc: Disc,
    /// Number of discs solved.
    pub evaluations: usize,
}

fn complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

struct UpperSolver<'a> {
    query: &'a MetricQuery,
    q: DeformationTensor,
    grid: PolarGrid,
    cfg: &'a UpperConfig,
    circle: Vec<Complex64>,
}

impl UpperSolver<'_> {
    /// Disc through `q` with `∂_x f(0) = v / α`, if it lies in `D`.
    fn try_alpha(&self, alpha: f64) -> Option<Disc> {
        let p = complex(&self.query.point);
        let v: Vec<Complex64> = complex(&self.query.vector).iter().map(|c| c / alpha).collect();
        let h: Vec<Vec<Complex64>> = p.iter().zip(&v).map(|(a, b)| vec![*a, *b]).collect();
        let pin = Pin::Center { p, v };
        let sol = solve_j_disc_pinned(&self.q, 1.0, &h, &pin, &self.grid, &self.cfg.picard).ok()?;
        let d = &self.query.domain;
        let ok = |x: &[f64]| d.in_box(x) && d.rho(x) <= -self.cfg.margin;
        let samples = sol.disc.samples();
        let mut x = vec![0.0; 2 * samples.len()];
        let on_grid = (0..self.grid.len()).all(|i| {
            for (a, comp) in samples.iter().enumerate() {
                x[2 * a] = comp[i].re;
                x[2 * a + 1] = comp[i].im;
            }
            ok(&x)
        });
        let inside = on_grid && self.circle.iter().all(|&z| ok(&sol.disc.eval_real(z)));
        inside.then_some(sol.disc)
    }
}

/// Least feasible `α` found by bisection in `log α` over
/// `[alpha_min, alpha_max]`, with the witness disc.
pub fn kr_upper(query: &MetricQuery, cfg: &UpperConfig) -> Result<UpperBound> {
    if query.vector.iter().all(|&x| x == 0.0) {
        return Err(err!(Parameter, "the vector must be nonzero"));
    }
    if !(cfg.tol > 0.0) || !(cfg.alpha_min > 0.0 && cfg.alpha_min < cfg.alpha_max) {
        return Err(err!(Parameter, "invalid bisection parameters"));
    }
    let solver = UpperSolver {
        query,
        q: DeformationTensor::from_structure(&query.structure),
        grid: PolarGrid::new(cfg.nr, cfg.ntheta, cfg.order)?,
        cfg,
        circle: PolarGrid::circle(cfg.boundary_samples),
    };
    let mut evaluations = 1;
    let Some(mut disc) = solver.try_alpha(cfg.alpha_max) else {
        return Err(err!(SearchRange, "no feasible α in [{:e}, {:e}]", cfg.alpha_min, cfg.alpha_max));
    };
    evaluations += 1;
    if let Some(d) = solver.try_alpha(cfg.alpha_min) {
        return Ok(UpperBound { value: cfg.alpha_min, disc: d, evaluations });
    }
    let (mut lo, mut hi) = (cfg.alpha_min, cfg.alpha_max);
    while hi / lo - 1.0 > cfg.tol {
        let mid = crate::math::sqrt(lo * hi);
        evaluations += 1;
        match solver.try_alpha(mid) {
            Some(d) => {
                hi = mid;
                disc = d;
            }
            None => lo = mid,
        }
    }
    Ok(UpperBound { value: hi, disc, evaluations })
}

/// Where the lower end of a bracket comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum LowerSource {
    Certificate,
    Inclusion(InclusionBound),
    /// No certificate applied; `0` is the only bound.
    Trivial,
}

#[derive(Debug, Clone)]
pub struct MetricBracket {
    pub lower: f64,
    pub upper: f64,
    pub witness: Disc,
    pub certificate: Option<PshCertificate>,
    /// Value of the weight certificate, when one was found.
    pub certificate_lower: Option<f64>,
    pub inclusions: Vec<InclusionBound>,
    pub lower_source: LowerSource,
    /// `f(sΔ) ⊂ D ∩ U` for the witness with `s = 0.25`.
    pub localization_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketConfig {
    pub upper: UpperConfig,
    pub certificate: CertificateConfig,
    /// Use ball and half-space inclusions when `J = J_st`.
    pub inclusion: bool,
    pub inclusion_rays: usize,
    pub localization_s: f64,
}

impl Default for BracketConfig {
    fn default() -> Self {
        BracketConfig {
            upper: UpperConfig::default(),
            certificate: CertificateConfig::default(),
            inclusion: true,
            inclusion_rays: 256,
            localization_s: 0.25,
        }
    }
}

/// Upper bound from discs combined with the best available lower bound.
pub fn kr_bracket(query: &MetricQuery, cfg: &BracketConfig) -> Result<MetricBracket> {
    let up = kr_upper(query, &cfg.upper)?;
    let mut lower = 0.0;
    let mut source = LowerSource::Trivial;
    let (certificate, certificate_lower, localization_ok) = match auto_certificate(query, &cfg.certificate) {
        Ok(cert) => {
            let value = kr_lower_certificate(query, &cert, &cfg.certificate)?;
            if value > lower {
                lower = value;
                source = LowerSource::Certificate;
            }
            let loc = localization_check(&query.domain, &cert.chart, &up.disc, cfg.localization_s);
            (Some(cert), Some(value), Some(loc))
        }
        Err(crate::Error::CertificateRejected(_)) => (None, None, None),
        Err(e) => return Err(e),
    };
    let inclusions = if cfg.inclusion {
        inclusion_bounds(query, cfg.inclusion_rays, cfg.certificate.per_axis)?
    } else {
        Vec::new()
    };
    for b in &inclusions {
        if b.value() > lower {
            lower = b.value();
            source = LowerSource::Inclusion(b.clone());
        }
    }
    if lower > up.value + 1e-8 {
        return Err(err!(Assembly, "bracket is inverted: lower {lower:e} > upper {:e}", up.value));
    }
    Ok(MetricBracket {
        lower,
        upper: up.value,
        witness: up.disc,
        certificate,
        certificate_lower,
        inclusions,
        lower_source: source,
        localization_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Tangential,
    Normal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupFit {
    pub deltas: Vec<f64>,
    /// `(lower, upper)` per distance.
    pub brackets: Vec<(f64, f64)>,
    pub slope: f64,
}

/// Distances `2^-k`, `k = 3..=7`.
pub fn dyadic_distances() -> Vec<f64> {
    (3..=7).map(|k| crate::math::powi(0.5, k)).collect()
}

/// Fits `log K` against `log δ` using bracket midpoints at points
/// `t - δ n(t)` along the inner normal from the boundary point `t`.
pub fn blowup_rate_fit(
    domain: &BoxDomain,
    j: &StructureField,
    t: &[f64],
    direction: Direction,
    deltas: &[f64],
    cfg: &BracketConfig,
) -> Result<BlowupFit> {
    let rho = domain.defining.as_ref().ok_or_else(|| err!(Parameter, "the domain needs a defining function"))?;
    if deltas.len() < 2 {
        return Err(err!(Parameter, "need at least two distances"));
    }
    let mut brackets = Vec::with_capacity(deltas.len());
    let mut mids = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let p = inner_point(rho, t, delta)?;
        let v: Vec<f64> = match direction {
            Direction::Normal => outward_normal(rho, &p)?.iter().map(|x| -x).collect(),
            Direction::Tangential => holomorphic_tangent(j, rho, &p)?.column(0).iter().copied().collect(),
        };
        let query = MetricQuery::new(domain.clone(), j.clone(), p, v)?;
        let b = kr_bracket(&query, cfg)?;
        if !(b.lower > 0.0) || b.upper / b.lower > 10.0 {
            return Err(err!(
                Inconclusive,
                "bracket [{:e}, {:e}] at δ = {delta} is wider than a factor 10",
                b.lower,
                b.upper
            ));
        }
        brackets.push((b.lower, b.upper));
        mids.push(0.5 * (b.lower + b.upper));
    }
    Ok(BlowupFit { deltas: deltas.to_vec(), brackets, slope: loglog_slope(deltas, &mids) })
}
