//! Command handlers. Each returns the checks and data of one report.

use acx_core::cotangent::{
    base_grid_samples, lift_invariance_check, lift_samples, lift_structure_on, project_to_hypersurface, total_reality_test, LiftConfig,
    LiftedStructure, REALITY_ANGLE,
};
use acx_core::disc::{
    cauchy_green, fd_dbar, linearized_rh_operator, reflect, solve_j_disc, solve_j_disc_pinned, torus_data,
    bishop_family, BishopConfig, DeformationTensor, PicardConfig, Pin, PolarGrid, Series, DEFAULT_ORDER,
};
use acx_core::field::{for_each_grid_point, j_st, ScalarField, StructureField, TangentVector};
use acx_core::kobayashi::{
    blowup_rate_fit, dyadic_distances, hopf_margin, inner_point, kr_bracket, tangent_map_anisotropy,
    BracketConfig, Direction, HopfConfig, InclusionBound, LowerSource, MetricQuery,
};
use acx_core::linalg::{min_abs_eigenvalue, orthonormalize};
use acx_core::maps::{AffineMap, Diffeo};
use acx_core::math::loglog_slope;
use acx_core::scaling::{
    dilate_defining, dilate_structure, model_domain, polydisc_samples, scaling_sequence, DilationSpec,
    ScalingConfig,
};
use acx_core::structure::{
    check_structure, is_strictly_pseudoconvex, levi_form, levi_matrix, levi_on_tangent, normalize_chart_with,
    STRUCTURE_TOL,
};
use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::cli::*;
use crate::corpus::{corpus_dir, corpus_list, resolve, sha256_hex, write_corpus};
use crate::format::{
    complex_vec, parse_complex_list, read_json, DiscJson, Fixture, PolyJson, SeedJson, StructureJson,
};
use crate::report::{num, nums, Check, FixtureHash};

/// What a handler produces.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub data: Value,
    pub csv: Option<String>,
}

/// Shared state: global flags and the fixtures read so far.
pub struct Ctx {
    pub global: GlobalArgs,
    pub fixtures: Vec<FixtureHash>,
}

impl Ctx {
    pub fn new(global: GlobalArgs) -> Self {
        Ctx { global, fixtures: Vec::new() }
    }

    pub fn fixture(&mut self, arg: &str) -> Result<Fixture> {
        let path = resolve(arg);
        let (bytes, f): (Vec<u8>, Fixture) = read_json(&path)?;
        self.fixtures.push(FixtureHash { path: arg.to_string(), sha256: sha256_hex(&bytes) });
        Ok(f)
    }

    fn tol(&self, default: f64) -> f64 {
        self.global.tol.unwrap_or(default)
    }

    fn rng(&self) -> Result<ChaCha8Rng> {
        let seed = match &self.global.seed {
            Some(s) => s.parse::<u64>().with_context(|| format!("--seed {s:?} is not an integer"))?,
            None => 0,
        };
        Ok(ChaCha8Rng::seed_from_u64(seed))
    }

    fn structure_or_standard(&mut self, arg: &Option<String>, dim: usize) -> Result<StructureField> {
        match arg {
            Some(a) => self.fixture(a)?.structure(),
            None => Ok(StructureField::standard(dim)?),
        }
    }
}

/// Rejects global flags outside their ranges.
pub fn validate(g: &GlobalArgs) -> Result<()> {
    if let Some(t) = g.tol {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--tol must be positive, got {t}");
        }
    }
    if let Some(n) = g.truncation {
        if n < 4 {
            bail!("--truncation must be at least 4, got {n}");
        }
    }
    if let Some(n) = g.grid {
        if n < 2 {
            bail!("--grid must be at least 2, got {n}");
        }
    }
    Ok(())
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|r| nums(&m.row(r).iter().copied().collect::<Vec<_>>())).collect())
}

fn complex_json(c: Complex64) -> Value {
    json!([num(c.re), num(c.im)])
}

fn points_arg(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_complex_list).collect()
}

fn check_dim(name: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        bail!("{name} has {} real coordinates, expected {dim}", v.len());
    }
    Ok(())
}

/// Random points of `[-1, 1]^dim` projected onto `{ρ = 0}`.
fn hypersurface_samples(rho: &ScalarField, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count.max(1) {
            bail!("could not place {count} samples on the hypersurface");
        }
        let z: Vec<f64> = (0..rho.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if let Ok(p) = project_to_hypersurface(rho, &z, 1e-14) {
            if p.iter().all(|x| x.abs() <= 2.0) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn disc_grid(g: &GlobalArgs) -> Result<PolarGrid> {
    let nr = g.grid.unwrap_or(acx_core::disc::DEFAULT_NR);
    Ok(PolarGrid::new(nr, 2 * nr, g.truncation.unwrap_or(DEFAULT_ORDER))?)
}

// structure

pub fn structure_check(ctx: &mut Ctx, a: &StructureCheck) -> Result<Outcome> {
    let j = ctx.fixture(&a.structure)?.structure()?;
    let per_axis = ctx.global.grid.unwrap_or(5);
    let mut samples = Vec::new();
    for_each_grid_point(j.dim(), per_axis, a.radius, |z| samples.push(z.to_vec()));
    let rep = check_structure(&j, &samples)?;
    Ok(Outcome {
        checks: vec![Check::le("max |J^2 + I|", rep.max_residual, ctx.tol(STRUCTURE_TOL))],
        data: json!({
            "dim": j.dim(),
            "samples": samples.len(),
            "max_residual": num(rep.max_residual),
            "worst_point": nums(&rep.worst_point),
        }),
        csv: None,
    })
}

pub fn structure_normalize(ctx: &mut Ctx, a: &StructureNormalize) -> Result<Outcome> {
    let j = ctx.fixture(&a.structure)?.structure()?;
    let p = match &a.point {
        Some(s) => parse_complex_list(s)?,
        None => vec![0.0; j.dim()],
    };
    check_dim("--point", &p, j.dim())?;
    let grid = ctx.global.grid.unwrap_or(9);
    let n = normalize_chart_with(&j, &p, a.lambda0, grid, 60)?;
    let at0 = (n.structure.matrix(&vec![0.0; j.dim()]) - j_st(j.dim())).amax();
    Ok(Outcome {
        checks: vec![
            Check::le("C^2 distance to J_st on the unit ball", n.c2_residual, a.lambda0),
            Check::le("|J_hat(0) - J_st|", at0, ctx.tol(1e-10)),
        ],
        data: json!({
            "center": nums(&n.center),
            "linear": matrix_json(&n.linear),
            "lambda": num(n.lambda),
            "c2_residual": num(n.c2_residual),
            "grid": grid,
        }),
        csv: None,
    })
}

// levi

pub fn levi_eval(ctx: &mut Ctx, a: &LeviEval) -> Result<Outcome> {
    let j = ctx.fixture(&a.structure)?.structure()?;
    let u = ctx.fixture(&a.function)?.defining()?;
    let z = parse_complex_list(&a.point)?;
    check_dim("--point", &z, j.dim())?;
    let m = levi_matrix(&j, &u, &z);
    let mut data = json!({ "point": nums(&z), "levi_matrix": matrix_json(&m) });
    let mut finite = m.iter().all(|x| x.is_finite());
    if let Some(v) = &a.vector {
        let v = parse_complex_list(v)?;
        check_dim("--vector", &v, j.dim())?;
        let value = levi_form(&j, &u, &TangentVector::new(z.clone(), v)?);
        finite &= value.is_finite();
        data["value"] = num(value);
    }
    Ok(Outcome { checks: vec![Check::flag("finite", finite)], data, csv: None })
}

pub fn levi_spc(ctx: &mut Ctx, a: &LeviSpc) -> Result<Outcome> {
    let j = ctx.fixture(&a.structure)?.structure()?;
    let rho = ctx.fixture(&a.hypersurface)?.defining()?;
    let samples = match &a.points {
        Some(p) => points_arg(p)?,
        None => hypersurface_samples(&rho, a.samples, &mut ctx.rng()?)?,
    };
    for z in &samples {
        check_dim("sample point", z, j.dim())?;
    }
    let rep = is_strictly_pseudoconvex(&j, &rho, &samples)?;
    Ok(Outcome {
        checks: vec![Check::flag("strictly pseudoconvex on all samples", rep.pass)],
        data: json!({
            "min_levi": num(rep.min_levi),
            "points": samples.iter().map(|z| nums(z)).collect::<Vec<_>>(),
            "per_point": nums(&rep.per_point),
        }),
        csv: None,
    })
}

// disc

/// `sup |∂bar_FD (T g) - g|` over the grid nodes.
fn transform_residual(grid: &PolarGrid, t: &Series, g: &dyn Fn(Complex64) -> Complex64) -> f64 {
    let f = |z: Complex64| t.eval(z);
    grid.points().into_iter().map(|z| (fd_dbar(&f, z, 1e-5) - g(z)).norm()).fold(0.0, f64::max)
}

type Input = (&'static str, fn(Complex64) -> Complex64);

pub fn disc_cauchy(ctx: &mut Ctx) -> Result<Outcome> {
    let grid = disc_grid(&ctx.global)?;
    let tol = ctx.tol(1e-4);
    let inputs: [Input; 4] = [
        ("1", |_| Complex64::new(1.0, 0.0)),
        ("zeta", |z| z),
        ("conj(zeta)", |z| z.conj()),
        ("exp(Re zeta)", |z| Complex64::new(z.re.exp(), 0.0)),
    ];
    let mut checks = Vec::new();
    let mut data = serde_json::Map::new();
    for (name, g) in inputs {
        let samples: Vec<Complex64> = grid.points().into_iter().map(g).collect();
        let t = cauchy_green(&grid, &samples)?;
        let r = transform_residual(&grid, &t, &g);
        checks.push(Check::le(&format!("|dbar T g - g| for g = {name}"), r, tol));
        data.insert(name.into(), num(r));
        if name == "1" {
            let e = grid.points().into_iter().map(|z| (t.eval(z) - z.conj()).norm()).fold(0.0, f64::max);
            checks.push(Check::le("|T(1) - conj(zeta)|", e, tol));
            data.insert("T(1) - conj(zeta)".into(), num(e));
        }
    }
    data.insert("grid".into(), json!({ "Nr": grid.nr(), "Ntheta": grid.ntheta(), "N": grid.order() }));
    Ok(Outcome { checks, data: Value::Object(data), csv: None })
}

fn read_seed(ctx: &mut Ctx) -> Result<Option<SeedJson>> {
    let Some(path) = ctx.global.seed.clone() else {
        return Ok(None);
    };
    let p = resolve(&path);
    let (bytes, seed): (Vec<u8>, SeedJson) = read_json(&p)?;
    ctx.fixtures.push(FixtureHash { path, sha256: sha256_hex(&bytes) });
    Ok(Some(seed))
}

pub fn disc_solve(ctx: &mut Ctx, a: &DiscSolve) -> Result<Outcome> {
    let q = ctx.fixture(&a.structure)?.tensor()?;
    let seed = read_seed(ctx)?.context("disc solve needs a seed disc: --seed <file>")?;
    let lambda = a.lambda.unwrap_or(seed.lambda);
    let h: Vec<Vec<Complex64>> = seed.taylor.iter().map(|t| complex_vec(t)).collect();
    if h.len() != q.n() {
        bail!("seed has {} components, the tensor acts on C^{}", h.len(), q.n());
    }
    let pin = match (&seed.center, &seed.velocity) {
        (Some(p), Some(v)) => Pin::Center { p: complex_vec(p), v: complex_vec(v) },
        (None, None) => Pin::None,
        _ => bail!("the seed must give both center and velocity, or neither"),
    };
    let grid = disc_grid(&ctx.global)?;
    let cfg = PicardConfig { tol: ctx.tol(1e-10), ..PicardConfig::default() };
    let sol = solve_j_disc_pinned(&q, lambda, &h, &pin, &grid, &cfg)?;
    Ok(Outcome {
        checks: vec![Check::le("sup |dbar f + q(f) conj(df)|", sol.residual, a.residual_max)],
        data: json!({
            "lambda": num(lambda),
            "iterations": sol.iterations,
            "increments": nums(&sol.increments),
            "q_sup": num(sol.q_sup),
            "disc": DiscJson::from_disc(&sol.disc),
        }),
        csv: None,
    })
}

/// Real coordinates of a Taylor polynomial in the kernel layout.
fn kernel_coords(t: &[Complex64], order: usize) -> Vec<f64> {
    let mut x = vec![0.0; 2 * (order + 1)];
    for (m, v) in t.iter().enumerate() {
        x[2 * m] = v.re;
        x[2 * m + 1] = v.im;
    }
    x
}

pub fn disc_bishop(ctx: &mut Ctx, a: &DiscBishop) -> Result<Outcome> {
    let f = ctx.fixture(&a.torus)?;
    let n = f.torus.with_context(|| format!("fixture {} has no torus", f.name))?;
    let data_rh = torus_data(n);
    let order = ctx.global.truncation.unwrap_or(16);
    let op = linearized_rh_operator(&data_rh, order)?;
    let deficiency = op.rank_deficiency(1e-8);
    let mut checks = vec![Check::eq("rank deficiency", deficiency as f64, (3 * n) as f64)];
    let sv = op.singular_values();
    let mut data = json!({
        "n": n,
        "N": order,
        "rank_deficiency": deficiency,
        "smallest_singular_values": nums(&sv[sv.len().saturating_sub(3 * n + 2)..]),
    });
    if n == 1 {
        let c = Complex64::new;
        let derived = [
            vec![c(0.0, 0.0), c(0.0, 1.0)],
            vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 1.0)],
        ];
        let cols: Vec<DVector<f64>> = derived.iter().map(|t| DVector::from_vec(kernel_coords(t, order))).collect();
        let (qd, _) = orthonormalize(&DMatrix::from_columns(&cols));
        let k = op.kernel(1e-8);
        let diff = if k.ncols() == 3 { (&k * k.transpose() - &qd * qd.transpose()).amax() } else { f64::INFINITY };
        checks.push(Check::le("kernel projector vs {i zeta, zeta^2 - 1, i(zeta^2 + 1)}", diff, ctx.tol(1e-8)));
        data["kernel_projector_error"] = num(diff);
    }
    if let Some(p) = &a.params {
        let t = crate::format::parse_real_list(p)?;
        let q = match &a.tensor {
            Some(tf) => ctx.fixture(tf)?.tensor()?,
            None => DeformationTensor::zero(n),
        };
        let cfg = BishopConfig::default();
        let sol = bishop_family(&data_rh, &q, a.lambda, &t, &cfg)?;
        checks.push(Check::le("sup |r(f)| on the circle", sol.boundary_residual, cfg.accept));
        data["family"] = json!({
            "params": nums(&t),
            "lambda": num(a.lambda),
            "iterations": sol.iterations,
            "boundary_residual": num(sol.boundary_residual),
            "parameter_residual": num(sol.parameter_residual),
            "disc": DiscJson::from_disc(&sol.disc),
        });
    }
    Ok(Outcome { checks, data, csv: None })
}

pub fn disc_reflect(ctx: &mut Ctx, a: &DiscReflect) -> Result<Outcome> {
    let q = ctx.fixture(&a.tensor)?.tensor()?;
    let (h, lambda) = match read_seed(ctx)? {
        Some(s) => (s.taylor.iter().map(|t| complex_vec(t)).collect::<Vec<_>>(), s.lambda),
        None => (vec![vec![Complex64::new(0.0, 0.0), Complex64::new(0.6, 0.0)]; q.n()], 1.0),
    };
    if h.len() != q.n() {
        bail!("seed has {} components, the tensor acts on C^{}", h.len(), q.n());
    }
    let grid = disc_grid(&ctx.global)?;
    let sol = solve_j_disc(&q, lambda, &h, &grid, &PicardConfig::default())?;
    let (_, rep) = reflect(&sol.disc, &q, lambda, 1e-8)?;
    let tol = ctx.tol(1e-6);
    Ok(Outcome {
        checks: vec![
            Check::le("equation residual, upper half", rep.residual_upper, tol),
            Check::le("equation residual, lower half", rep.residual_lower, tol),
            Check::le("first-derivative jump across the seam", rep.seam_derivative_jump, 1e-4),
        ],
        data: json!({
            "lambda": num(lambda),
            "boundary_distance": num(rep.boundary_distance),
            "residual_upper": num(rep.residual_upper),
            "residual_lower": num(rep.residual_lower),
            "seam_value_jump": num(rep.seam_value_jump),
            "seam_derivative_jump": num(rep.seam_derivative_jump),
        }),
        csv: None,
    })
}

// metric

fn inclusion_json(b: &InclusionBound) -> Value {
    json!({ "kind": format!("{b:?}").split('(').next().unwrap_or("").trim(), "value": num(b.value()) })
}

pub fn metric_bracket(ctx: &mut Ctx, a: &MetricBracketArgs) -> Result<Outcome> {
    let domain = ctx.fixture(&a.domain)?.domain()?;
    let j = ctx.structure_or_standard(&a.structure, domain.dim)?;
    let p = parse_complex_list(&a.point)?;
    let v = parse_complex_list(&a.vector)?;
    let query = MetricQuery::new(domain, j, p, v)?;
    let mut cfg = BracketConfig::default();
    cfg.upper.tol = ctx.tol(cfg.upper.tol);
    let b = kr_bracket(&query, &cfg)?;
    let mut checks = vec![Check::le("lower <= upper", b.lower, b.upper)];
    if let Some(e) = a.expect {
        checks.push(Check::flag(&format!("{e} lies in the bracket"), b.lower <= e && e <= b.upper));
    }
    let certificate = match &b.certificate {
        Some(c) => json!({
            "c": num(c.c), "L": num(c.l), "A": num(c.a), "B": num(c.b), "tau": num(c.tau),
            "r": num(c.r), "diameter": num(c.diameter), "constant": num(c.constant()),
            "lower": b.certificate_lower.map(num),
        }),
        None => Value::Null,
    };
    let source = match &b.lower_source {
        LowerSource::Certificate => json!("certificate"),
        LowerSource::Inclusion(i) => inclusion_json(i),
        LowerSource::Trivial => json!("trivial"),
    };
    Ok(Outcome {
        checks,
        data: json!({
            "lower": num(b.lower),
            "upper": num(b.upper),
            "lower_source": source,
            "certificate": certificate,
            "localization_ok": b.localization_ok,
            "witness": DiscJson::from_disc(&b.witness),
        }),
        csv: None,
    })
}

pub fn metric_rate(ctx: &mut Ctx, a: &MetricRate) -> Result<Outcome> {
    let domain = ctx.fixture(&a.domain)?.domain()?;
    let j = ctx.structure_or_standard(&a.structure, domain.dim)?;
    let t = parse_complex_list(&a.point)?;
    check_dim("--point", &t, domain.dim)?;
    let dir = match a.direction {
        DirectionArg::Normal => Direction::Normal,
        DirectionArg::Tangential => Direction::Tangential,
    };
    let deltas = dyadic_distances();
    let fit = blowup_rate_fit(&domain, &j, &t, dir, &deltas, &BracketConfig::default())?;
    let mut checks = vec![Check::lt("fitted slope", fit.slope, 0.0)];
    if let Some(e) = a.expect {
        checks.push(Check::le(&format!("|slope - ({e})|"), (fit.slope - e).abs(), a.slope_tol));
    }
    let mut csv = String::from("k,delta,lower,upper\n");
    for (i, (d, (lo, hi))) in deltas.iter().zip(&fit.brackets).enumerate() {
        csv.push_str(&format!("{},{d:e},{lo:e},{hi:e}\n", i + 3));
    }
    Ok(Outcome {
        checks,
        data: json!({
            "slope": num(fit.slope),
            "deltas": nums(&fit.deltas),
            "brackets": fit.brackets.iter().map(|(l, u)| json!([num(*l), num(*u)])).collect::<Vec<_>>(),
        }),
        csv: Some(csv),
    })
}

pub fn metric_hopf(ctx: &mut Ctx, a: &MetricHopf) -> Result<Outcome> {
    let domain = ctx.fixture(&a.domain)?.domain()?;
    let u = match &a.function {
        Some(f) => ctx.fixture(f)?.defining()?,
        None => domain.defining.clone().expect("fixture domains have defining functions"),
    };
    let compact = match &a.compact {
        Some(s) => points_arg(s)?,
        None => vec![domain.lo.iter().zip(&domain.hi).map(|(l, h)| 0.5 * (l + h)).collect()],
    };
    let rep = hopf_margin(&domain, &u, &compact, &HopfConfig::default())?;
    Ok(Outcome {
        checks: vec![
            Check::gt("margin", rep.margin, 0.0),
            Check::le("decay slope", rep.decay_slope, HopfConfig::default().max_decay_slope),
        ],
        data: json!({
            "deltas": nums(&HopfConfig::default().deltas),
            "per_delta": nums(&rep.per_delta),
            "margin": num(rep.margin),
            "l_on_compact": num(rep.l_on_compact),
            "decay_slope": num(rep.decay_slope),
        }),
        csv: None,
    })
}

pub fn metric_anisotropy(ctx: &mut Ctx, a: &MetricAnisotropy) -> Result<Outcome> {
    let map = ctx.fixture(&a.map)?.map()?;
    let d = ctx.fixture(&a.domain)?.domain()?;
    let d2 = match &a.target_domain {
        Some(f) => ctx.fixture(f)?.domain()?,
        None => d.clone(),
    };
    let j = ctx.structure_or_standard(&a.structure, d.dim)?;
    let j2 = match &a.target_structure {
        Some(f) => ctx.fixture(f)?.structure()?,
        None => j.clone(),
    };
    let t = parse_complex_list(&a.point)?;
    check_dim("--point", &t, d.dim)?;
    let rho = d.defining.as_ref().expect("fixture domains have defining functions");
    let points = dyadic_distances().iter().map(|&s| inner_point(rho, &t, s)).collect::<acx_core::Result<Vec<_>>>()?;
    let rep = tangent_map_anisotropy(&map, &d, &d2, &j, &j2, &points)?;
    let exps: Vec<Value> = rep.exponents.iter().map(|r| nums(r)).collect();
    Ok(Outcome {
        checks: vec![Check::flag("exponents at least (0, -1/2, 1/2, 0)", rep.consistent)],
        data: json!({
            "exponents": exps,
            "holomorphy_residual": num(rep.holomorphy_residual),
            "samples": rep.samples.iter().map(|s| json!({
                "dist": num(s.dist),
                "abs": s.abs.iter().map(|r| nums(r)).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }),
        csv: None,
    })
}

// lift

pub fn lift_build(ctx: &mut Ctx, a: &LiftBuild) -> Result<Outcome> {
    let s = a.structure.as_deref().context("lift needs --structure <file>")?;
    let j = ctx.fixture(s)?.structure()?;
    let cfg = LiftConfig { per_axis: ctx.global.grid.unwrap_or(5), ..LiftConfig::default() };
    let samples = base_grid_samples(j.dim(), &cfg);
    let lifted = lift_structure_on(&j, &samples, f64::INFINITY)?;
    Ok(Outcome {
        checks: vec![Check::le("max |J~^2 + I|", lifted.validation_residual, ctx.tol(1e-9))],
        data: json!({
            "base_dim": j.dim(),
            "samples": samples.len(),
            "per_axis": cfg.per_axis,
            "base_radius": num(cfg.base_radius),
            "fiber_radius": num(cfg.fiber_radius),
        }),
        csv: None,
    })
}

/// `A x + b` when every component has degree at most one.
fn as_affine(f: &Fixture) -> Result<Option<AffineMap>> {
    let comps = f.map.as_ref().context("fixture has no map")?;
    let polys = comps.iter().map(PolyJson::to_poly).collect::<Result<Vec<_>>>()?;
    if polys.iter().any(|p| p.degree() > 1) {
        return Ok(None);
    }
    let m = polys.len();
    let zero = vec![0.0; m];
    let b: Vec<f64> = polys.iter().map(|p| p.eval(&zero)).collect();
    let a = DMatrix::from_fn(m, m, |r, c| polys[r].deriv(c).eval(&zero));
    Ok(Some(AffineMap::new(a, b)?))
}

pub fn lift_invariance(ctx: &mut Ctx, a: &LiftInvariance) -> Result<Outcome> {
    let j = ctx.fixture(&a.structure)?.structure()?;
    let mf = ctx.fixture(&a.map)?;
    let map = mf.map()?;
    let j2 = match &a.target {
        Some(t) => ctx.fixture(t)?.structure()?,
        None => match as_affine(&mf)? {
            Some(aff) => j.push_affine(&aff.a, &aff.b)?,
            None => bail!("map {} is not affine: pass --target <structure>", mf.name),
        },
    };
    if map.dim() != j.dim() {
        bail!("map acts on R^{}, structure on R^{}", map.dim(), j.dim());
    }
    let cfg = LiftConfig { per_axis: ctx.global.grid.unwrap_or(3), random_samples: a.samples, ..LiftConfig::default() };
    let points = lift_samples(j.dim(), &cfg);
    let rep = lift_invariance_check(&map, &j, &j2, &points)?;
    Ok(Outcome {
        checks: vec![Check::le("max |Df~ J~ - J~' Df~|", rep.max_residual, ctx.tol(1e-6))],
        data: json!({
            "samples": rep.samples,
            "precondition_residual": num(rep.precondition_residual),
            "max_residual": num(rep.max_residual),
        }),
        csv: None,
    })
}

pub fn conormal_test(ctx: &mut Ctx, a: &ConormalArgs) -> Result<Outcome> {
    let rho = ctx.fixture(&a.hypersurface)?.defining()?;
    let mut j = ctx.fixture(&a.structure)?.structure()?;
    if let Some(d) = a.dilate {
        j = dilate_structure(&j, &DilationSpec::nonisotropic(d)?)?;
    }
    if rho.dim() != j.dim() {
        bail!("hypersurface in R^{}, structure on R^{}", rho.dim(), j.dim());
    }
    let points = match &a.points {
        Some(p) => points_arg(p)?,
        None => hypersurface_samples(&rho, a.samples, &mut ctx.rng()?)?,
    };
    let lifted = LiftedStructure { base: j.clone(), validation_residual: 0.0 };
    let samples: Vec<(Vec<f64>, f64)> = points.iter().map(|z| (z.clone(), a.coefficient)).collect();
    let rep = total_reality_test(&rho, &lifted, &samples, REALITY_ANGLE)?;
    let levi: Vec<f64> =
        points.iter().map(|z| Ok(min_abs_eigenvalue(&levi_on_tangent(&j, &rho, z)?))).collect::<acx_core::Result<_>>()?;
    let nondegenerate = levi.iter().all(|&e| e > 1e-6);
    let agree = points
        .iter()
        .zip(&rep.samples)
        .zip(&levi)
        .all(|((_, s), &e)| (s.angle > REALITY_ANGLE) == (e > 1e-6));
    Ok(Outcome {
        checks: vec![
            Check::gt("smallest principal angle between T and J~T", rep.min_angle, REALITY_ANGLE),
            Check::flag("total reality agrees with Levi nondegeneracy", agree),
        ],
        data: json!({
            "totally_real": rep.pass,
            "levi_nondegenerate": nondegenerate,
            "coefficient": num(a.coefficient),
            "samples": rep.samples.iter().zip(&levi).map(|(s, e)| json!({
                "point": nums(&s.point),
                "angle": num(s.angle),
                "intersection_dim": s.intersection_dim,
                "levi_min_abs": num(*e),
            })).collect::<Vec<_>>(),
        }),
        csv: None,
    })
}

// scale

pub fn scale_dilate(ctx: &mut Ctx, a: &ScaleDilate) -> Result<Outcome> {
    let j = ctx.fixture(&a.structure)?.structure()?;
    let spec = match a.kind {
        DilationArg::Nonisotropic => DilationSpec::nonisotropic(a.delta)?,
        DilationArg::Isotropic => DilationSpec::isotropic(a.delta)?,
    };
    let jd = dilate_structure(&j, &spec)?;
    let mut samples = Vec::new();
    for_each_grid_point(j.dim(), ctx.global.grid.unwrap_or(5), 1.0, |z| samples.push(z.to_vec()));
    let sq = check_structure(&jd, &samples)?;
    let js = j_st(j.dim());
    let sup = samples.iter().map(|z| (jd.matrix(z) - &js).amax()).fold(0.0, f64::max);
    let mut data = json!({
        "delta": num(a.delta),
        "kind": a.kind,
        "sup_distance_to_jst": num(sup),
        "structure": StructureJson::from_field(&jd).ok(),
    });
    if let Some(d) = &a.domain {
        let rho = ctx.fixture(d)?.defining()?;
        let rd = dilate_defining(&rho, &spec)?;
        data["defining"] = json!(rd.as_poly().map(PolyJson::from_poly));
    }
    Ok(Outcome {
        checks: vec![Check::le("max |J_delta^2 + I| on [-1, 1]^dim", sq.max_residual, ctx.tol(1e-10))],
        data,
        csv: None,
    })
}

pub fn scale_run(ctx: &mut Ctx, a: &ScaleRun) -> Result<Outcome> {
    let rho = ctx.fixture(&a.domain)?.defining()?;
    let j = ctx.fixture(&a.structure)?.structure()?;
    let t = parse_complex_list(&a.point)?;
    let ray = parse_complex_list(&a.ray)?;
    check_dim("--point", &t, 4)?;
    check_dim("--ray", &ray, 4)?;
    if a.steps < 2 {
        bail!("--steps must be at least 2");
    }
    let ks: Vec<u32> = (a.start..a.start + a.steps as u32).collect();
    let points: Vec<Vec<f64>> =
        ks.iter().map(|&k| t.iter().zip(&ray).map(|(x, r)| x + 0.5f64.powi(k as i32) * r).collect()).collect();
    let cfg = ScalingConfig { per_axis: ctx.global.grid.unwrap_or(5), ..ScalingConfig::default() };
    let seq = scaling_sequence(&rho, &j, &t, &points, &cfg)?;
    let deltas: Vec<f64> = seq.steps.iter().map(|s| s.delta).collect();
    let c2: Vec<f64> = seq.steps.iter().map(|s| s.structure_c2).collect();
    let rc2: Vec<f64> = seq.steps.iter().map(|s| s.defining_c2).collect();
    let stationary = 1e-12;
    let mut checks = Vec::new();
    if c2.iter().all(|&x| x <= stationary) {
        checks.push(Check::le("max C^2 distance of J_k to J_st (stationary)", c2.iter().copied().fold(0.0, f64::max), stationary));
    } else {
        checks.push(Check::ge("C^2 decay rate of J_k against delta", loglog_slope(&deltas, &c2), 0.4));
    }
    if rc2.iter().all(|&x| x <= stationary) {
        checks.push(Check::le("max C^2 distance of rho_k to the model (stationary)", rc2.iter().copied().fold(0.0, f64::max), stationary));
    } else {
        checks.push(Check::gt("C^2 decay rate of rho_k against delta", loglog_slope(&deltas, &rc2), 0.0));
    }
    let perr = seq.steps.iter().map(|s| s.point_error).fold(0.0, f64::max);
    checks.push(Check::le("max |p_k - (0, -1)|", perr, ctx.tol(1e-8)));
    let mut csv = String::from("k,delta,structure_sup,structure_c2,defining_c2,point_error\n");
    let mut steps = Vec::new();
    for (k, s) in ks.iter().zip(&seq.steps) {
        csv.push_str(&format!(
            "{k},{:e},{:e},{:e},{:e},{:e}\n",
            s.delta, s.structure_sup, s.structure_c2, s.defining_c2, s.point_error
        ));
        steps.push(json!({
            "k": k,
            "delta": num(s.delta),
            "foot": nums(&s.foot),
            "point_hat": nums(&s.point_hat),
            "structure_sup": num(s.structure_sup),
            "structure_c2": num(s.structure_c2),
            "defining_c2": num(s.defining_c2),
            "point_error": num(s.point_error),
        }));
    }
    Ok(Outcome {
        checks,
        data: json!({
            "model": { "k": complex_json(seq.model.k), "h": num(seq.model.h) },
            "steps": steps,
        }),
        csv: Some(csv),
    })
}

pub fn scale_model(ctx: &mut Ctx, a: &ScaleModel) -> Result<Outcome> {
    let rho = ctx.fixture(&a.domain)?.defining()?;
    let j = ctx.structure_or_standard(&a.structure, rho.dim())?;
    let t = parse_complex_list(&a.point)?;
    let m = model_domain(&rho, &j, &t)?;
    let samples = polydisc_samples(1.0, 3);
    Ok(Outcome {
        checks: vec![Check::gt("h", m.h, 0.0)],
        data: json!({
            "k": complex_json(m.k),
            "h": num(m.h),
            "defining": m.defining.as_poly().map(PolyJson::from_poly),
            "polydisc_samples": samples.len(),
        }),
        csv: None,
    })
}

// corpus

pub fn corpus_list_cmd(a: &CorpusDir) -> Result<Outcome> {
    let dir = a.dir.clone().unwrap_or_else(corpus_dir);
    let index = corpus_list(&dir)?;
    Ok(Outcome { checks: Vec::new(), data: json!({ "fixtures": index }), csv: None })
}

pub fn corpus_write_cmd(a: &CorpusDir) -> Result<Outcome> {
    let dir = a.dir.clone().unwrap_or_else(corpus_dir);
    let files = write_corpus(&dir)?;
    let names: Vec<String> =
        files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    Ok(Outcome { checks: Vec::new(), data: json!({ "written": names }), csv: None })
}
