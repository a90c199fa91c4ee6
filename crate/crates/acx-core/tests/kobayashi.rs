use acx_core::field::{BoxDomain, ScalarField, StructureField};
use acx_core::fixtures::{self, ball_domain, unit_ball};
use acx_core::kobayashi::*;
use acx_core::maps::{AffineMap, FnMap, PolyMap};
use acx_core::poly::{ComplexPoly, Poly};
use acx_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn jst(dim: usize) -> StructureField {
    StructureField::standard(dim).unwrap()
}

fn query(d: &BoxDomain, j: &StructureField, p: &[f64], v: &[f64]) -> MetricQuery {
    MetricQuery::new(d.clone(), j.clone(), p.to_vec(), v.to_vec()).unwrap()
}

fn fine() -> UpperConfig {
    UpperConfig { tol: 1e-8, ..UpperConfig::default() }
}

#[test]
fn unit_disc_at_the_center() {
    let d = unit_ball(1);
    let q = query(&d, &jst(2), &[0.0, 0.0], &[1.0, 0.0]);
    let mut last = f64::INFINITY;
    for tol in [1e-2, 1e-4, 1e-8] {
        let up = kr_upper(&q, &UpperConfig { tol, ..UpperConfig::default() }).unwrap();
        assert!(up.value >= 1.0 - 1e-12);
        assert!((up.value - 1.0) <= (last - 1.0).max(2e-6));
        last = up.value;
    }
    assert!((last - 1.0).abs() < 2e-6);
    let b = kr_bracket(&q, &BracketConfig::default()).unwrap();
    assert!(b.lower <= 1.0 && 1.0 <= b.upper && b.upper - b.lower <= 0.2, "{} {}", b.lower, b.upper);
}

#[test]
fn translated_discs_scale_like_the_radius() {
    let center = [0.3, -0.2];
    let tau = [0.6, 0.8];
    for d in [0.5, 0.25] {
        let dom = ball_domain(&center, d).unwrap();
        let q = query(&dom, &jst(2), &center, &tau);
        let up = kr_upper(&q, &fine()).unwrap();
        assert!((up.value - 1.0 / d).abs() <= 0.02 / d, "d = {d}: {}", up.value);
        let b = kr_bracket(&q, &BracketConfig::default()).unwrap();
        assert!(b.lower <= 1.0 / d + 1e-9 && b.upper >= 1.0 / d - 1e-9);
    }
}

#[test]
fn ball_with_diagonal_structure_stays_near_the_standard_value() {
    let d = unit_ball(2);
    let j = fixtures::diagonal_fixture();
    for v in [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.6, 0.8], [0.5, 0.5, 0.5, 0.5]] {
        let q = query(&d, &j, &[0.0; 4], &v);
        let up = kr_upper(&q, &UpperConfig::default()).unwrap();
        assert!((0.8..=1.3).contains(&up.value), "{v:?}: {}", up.value);
        let b = kr_bracket(&q, &BracketConfig::default()).unwrap();
        assert!(b.lower > 0.0 && b.lower <= b.upper);
        assert_eq!(b.lower_source, LowerSource::Certificate);
    }
}

#[test]
fn zero_vector_is_rejected_by_the_upper_bound() {
    let q = query(&unit_ball(1), &jst(2), &[0.0, 0.0], &[0.0, 0.0]);
    assert!(matches!(kr_upper(&q, &UpperConfig::default()), Err(Error::Parameter(_))));
}

#[test]
fn search_range_exhaustion_is_reported() {
    let q = query(&unit_ball(1), &jst(2), &[0.0, 0.0], &[1.0, 0.0]);
    let cfg = UpperConfig { alpha_max: 0.5, ..UpperConfig::default() };
    assert!(matches!(kr_upper(&q, &cfg), Err(Error::SearchRange(_))));
}

fn ball_certificate(q: &MetricQuery, c: f64) -> PshCertificate {
    let u = ScalarField::from_poly(fixtures::ball_defining(&[0.0; 4], 1.0));
    let chart = ChartData::new(&q.structure, &q.point).unwrap();
    PshCertificate { u, c, l: 1.0, a: 0.01, b: 22.387211385683408, tau: 2.0 * 22.387211385683408 / c, r: 0.9, diameter: 1.0, chart }
}

#[test]
fn certificate_on_the_ball() {
    let d = unit_ball(2);
    let cfg = CertificateConfig::default();
    let v = [0.6, 0.0, 0.0, 0.8];
    let q = query(&d, &jst(4), &[0.0; 4], &v);
    let cert = ball_certificate(&q, 1.0);
    let lower = kr_lower_certificate(&q, &cert, &cfg).unwrap();
    let cp = (1.0 / (2.0 * cert.b * (1.0 + 0.01f64).exp())).sqrt();
    assert!((lower - cp).abs() < 1e-12 && lower <= 1.0);

    let q0 = q.with_vector(vec![0.0; 4]).unwrap();
    assert_eq!(kr_lower_certificate(&q0, &cert, &cfg).unwrap(), 0.0);
    let q2 = q.with_vector(v.iter().map(|x| 2.0 * x).collect()).unwrap();
    assert!((kr_lower_certificate(&q2, &cert, &cfg).unwrap() - 2.0 * lower).abs() < 1e-14);
}

#[test]
fn invalid_certificates_are_rejected() {
    let d = unit_ball(2);
    let cfg = CertificateConfig::default();
    let q = query(&d, &jst(4), &[0.0; 4], &[1.0, 0.0, 0.0, 0.0]);
    // u - 2|z|^2 is not psh
    let too_convex = ball_certificate(&q, 2.0);
    assert!(matches!(kr_lower_certificate(&q, &too_convex, &cfg), Err(Error::CertificateRejected(_))));
    // L smaller than sup |u|
    let mut small_l = ball_certificate(&q, 1.0);
    small_l.l = 0.5;
    assert!(matches!(kr_lower_certificate(&q, &small_l, &cfg), Err(Error::CertificateRejected(_))));
    // u positive inside D
    let mut positive = ball_certificate(&q, 1.0);
    positive.u = ScalarField::from_poly(fixtures::ball_defining(&[0.0; 4], 0.5));
    assert!(matches!(kr_lower_certificate(&q, &positive, &cfg), Err(Error::CertificateRejected(_))));
    // B too small for the weight
    let mut weak = ball_certificate(&q, 1.0);
    weak.b = 1.0;
    assert!(matches!(kr_lower_certificate(&q, &weak, &cfg), Err(Error::CertificateRejected(_))));
}

#[test]
fn bracket_width_near_the_ball_boundary_grows_like_inverse_sqrt_distance() {
    let d = unit_ball(2);
    let cfg = BracketConfig { inclusion: false, ..BracketConfig::default() };
    let mut scaled = Vec::new();
    for delta in [0.1, 0.05, 0.025] {
        let q = query(&d, &jst(4), &[0.0, 0.0, 1.0 - delta, 0.0], &[0.0, 0.0, 1.0, 0.0]);
        let b = kr_bracket(&q, &cfg).unwrap();
        // explicit ball metric in the normal direction
        let exact = 1.0 / (1.0 - (1.0 - delta) * (1.0 - delta));
        assert!(b.lower <= exact && exact <= b.upper);
        scaled.push(b.upper / b.lower * delta.sqrt());
    }
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 1.5, "{scaled:?}");
}

#[test]
fn inclusions_reproduce_the_ball_metric() {
    let d = unit_ball(2);
    let p = [0.1, -0.2, 0.3, 0.0];
    let v = [0.2, 0.5, -0.1, 0.4];
    let q = query(&d, &jst(4), &p, &v);
    let exact = ball_metric(&[0.0; 4], 1.0, &p, &v).unwrap();
    let best = inclusion_bounds(&q, 256, None).unwrap().iter().map(|b| b.value()).fold(0.0, f64::max);
    assert!((best - exact).abs() < 1e-9 * exact);
    // no inclusion bounds for a non-standard structure
    let q = query(&d, &fixtures::diagonal_fixture(), &p, &v);
    assert!(inclusion_bounds(&q, 64, None).unwrap().is_empty());
}

#[test]
fn upper_bound_is_monotone_under_inclusion() {
    let pairs: Vec<(BoxDomain, BoxDomain, StructureField, Vec<f64>, Vec<f64>)> = vec![
        (ball_domain(&[0.0, 0.0], 0.5).unwrap(), unit_ball(1), jst(2), vec![0.1, 0.05], vec![0.3, 0.7]),
        (
            ball_domain(&[0.0; 4], 0.5).unwrap(),
            ball_domain(&[0.0; 4], 0.8).unwrap(),
            fixtures::perturbed_fixture(),
            vec![0.05, 0.0, -0.1, 0.02],
            vec![1.0, 0.0, 0.5, 0.0],
        ),
        (
            ball_domain(&[0.2, 0.0, 0.0, 0.0], 0.3).unwrap(),
            unit_ball(2),
            fixtures::diagonal_fixture(),
            vec![0.25, 0.0, 0.0, 0.1],
            vec![0.0, 1.0, 0.0, 0.0],
        ),
    ];
    for (small, big, j, p, v) in pairs {
        let us = kr_upper(&query(&small, &j, &p, &v), &fine()).unwrap().value;
        let ub = kr_upper(&query(&big, &j, &p, &v), &fine()).unwrap().value;
        assert!(ub <= us + 1e-6, "{ub} > {us}");
    }
}

#[test]
fn upper_bound_is_homogeneous() {
    let d = unit_ball(2);
    let j = fixtures::perturbed_fixture();
    let v = [0.3, 0.1, 0.0, 0.4];
    let u1 = kr_upper(&query(&d, &j, &[0.0; 4], &v), &fine()).unwrap().value;
    let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
    let u2 = kr_upper(&query(&d, &j, &[0.0; 4], &v2), &fine()).unwrap().value;
    assert!((u2 / u1 - 2.0).abs() < 1e-7);
}

#[test]
fn blowup_rates_on_the_ball() {
    let d = unit_ball(2);
    let t = [0.0, 0.0, 1.0, 0.0];
    let cfg = BracketConfig::default();
    let normal = blowup_rate_fit(&d, &jst(4), &t, Direction::Normal, &dyadic_distances(), &cfg).unwrap();
    assert!((normal.slope + 1.0).abs() <= 0.1, "{normal:?}");
    let tangential = blowup_rate_fit(&d, &jst(4), &t, Direction::Tangential, &dyadic_distances(), &cfg).unwrap();
    assert!((tangential.slope + 0.5).abs() <= 0.1, "{tangential:?}");
}

#[test]
fn shrinking_discs_around_an_interior_point() {
    let radii = [0.4, 0.2, 0.1, 0.05];
    let ks: Vec<f64> = radii
        .iter()
        .map(|&r| kr_upper(&query(&ball_domain(&[0.0, 0.0], r).unwrap(), &jst(2), &[0.0, 0.0], &[1.0, 0.0]), &fine()).unwrap().value)
        .collect();
    let slope = acx_core::math::loglog_slope(&radii, &ks);
    assert!((slope + 1.0).abs() < 1e-3, "{slope}");
}

#[test]
fn wide_brackets_are_inconclusive() {
    let d = unit_ball(2);
    let cfg = BracketConfig { inclusion: false, ..BracketConfig::default() };
    let r = blowup_rate_fit(&d, &jst(4), &[0.0, 0.0, 1.0, 0.0], Direction::Normal, &[0.05, 0.01], &cfg);
    assert!(matches!(r, Err(Error::Inconclusive(_))));
}

#[test]
fn cutoff_is_smooth_and_monotone() {
    let cut = Cutoff::new(0.9).unwrap();
    let mut prev = 0.0;
    for k in 0..=1000 {
        let s = k as f64 / 1000.0;
        let (v, d1, d2) = cut.jet(s);
        assert!(v >= prev - 1e-15 && d1 >= -1e-12);
        prev = v;
        let h = 1e-6;
        // only C^2 at the knots r/3 and 2r/3
        let knot = (s - 0.3).abs() < 1e-5 || (s - 0.6).abs() < 1e-5;
        if s > h && s < 1.0 - h && !knot {
            let fd1 = (cut.jet(s + h).0 - cut.jet(s - h).0) / (2.0 * h);
            let fd2 = (cut.jet(s + h).1 - cut.jet(s - h).1) / (2.0 * h);
            assert!((fd1 - d1).abs() < 1e-6 && (fd2 - d2).abs() < 1e-4, "s = {s}");
        }
    }
    assert_eq!(cut.jet(0.2), (0.2, 1.0, 0.0));
    assert_eq!(cut.jet(0.7), (1.0, 0.0, 0.0));
    assert!(Cutoff::new(1.0).is_err());
}

/// Weight constants shipped for structures with `||J - J_st||_{C^2} <= 0.05`.
const SHIPPED: (f64, f64, f64) = (0.1, 25.0, 0.9);

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn shipped_weight_is_psh_for_small_perturbations(seed in 0u64..1000) {
        let mut eps = 0.05;
        let (j, chart) = loop {
            let j = fixtures::random_structure(seed, 2, eps).unwrap();
            let chart = ChartData::new(&j, &[0.0; 4]).unwrap();
            if chart.c2_residual <= 0.05 {
                break (j, chart);
            }
            eps *= 0.5;
        };
        let (a, b, r) = SHIPPED;
        prop_assert!(chirka_min_levi(&j, &chart, a, b, r).unwrap() >= -1e-9);
    }

    #[test]
    fn brackets_are_ordered(seed in 0u64..1000, x in -0.5f64..0.5, y in -0.5f64..0.5, t in 0.0f64..6.28) {
        let j = fixtures::random_structure(seed, 1, 0.05).unwrap();
        let d = unit_ball(1);
        let q = query(&d, &j, &[x, y], &[t.cos(), t.sin()]);
        let b = kr_bracket(&q, &BracketConfig::default()).unwrap();
        prop_assert!(b.lower <= b.upper + 1e-8);
    }
}

#[test]
fn hopf_margin_on_the_disc_and_the_ball() {
    let disc = unit_ball(1);
    let u = ScalarField::from_poly(fixtures::ball_defining(&[0.0, 0.0], 1.0));
    let cfg = HopfConfig::default();
    let rep = hopf_margin(&disc, &u, &[vec![0.0, 0.0], vec![0.3, 0.2]], &cfg).unwrap();
    assert!(rep.pass && rep.margin >= 1.0, "{rep:?}");
    // 1 - |ζ|^2 = δ (2 - δ) at distance δ
    assert!((rep.margin - (2.0 - 0.1)).abs() < 1e-9);

    let ball = unit_ball(2);
    let rho = ScalarField::from_poly(fixtures::ball_defining(&[0.0; 4], 1.0));
    let rt = acx_core::structure::psh_defining_function(&rho, 0.5);
    let rep = hopf_margin(&ball, &rt, &[vec![0.0; 4]], &cfg).unwrap();
    assert!(rep.pass && rep.margin > 0.5, "{rep:?}");

    let rep2 = hopf_margin(&ball, &rt.scaled(2.0), &[vec![0.0; 4]], &cfg).unwrap();
    assert!((rep2.margin - 2.0 * rep.margin).abs() < 1e-12);
}

#[test]
fn hopf_margin_detects_flat_and_positive_weights() {
    let disc = unit_ball(1);
    let rho = fixtures::ball_defining(&[0.0, 0.0], 1.0);
    // -(1 - |ζ|^2)^2 vanishes to second order at the boundary
    let flat = ScalarField::from_poly(rho.mul(&rho).scale(-1.0));
    let rep = hopf_margin(&disc, &flat, &[vec![0.0, 0.0]], &HopfConfig::default()).unwrap();
    assert!(!rep.pass && rep.decay_slope > 0.9, "{rep:?}");
    let positive = ScalarField::from_poly(rho.scale(-1.0));
    assert!(matches!(
        hopf_margin(&disc, &positive, &[vec![0.0, 0.0]], &HopfConfig::default()),
        Err(Error::Precondition(_))
    ));
}

fn unitary() -> AffineMap {
    // (z1, z2) -> ((z1 + i z2) / √2, (i z1 + z2) / √2) in real coordinates
    let s = 1.0 / 2f64.sqrt();
    let u = [[Complex64::new(s, 0.0), Complex64::new(0.0, s)], [Complex64::new(0.0, s), Complex64::new(s, 0.0)]];
    let mut a = DMatrix::zeros(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            let z = u[r][c];
            a[(2 * r, 2 * c)] = z.re;
            a[(2 * r, 2 * c + 1)] = -z.im;
            a[(2 * r + 1, 2 * c)] = z.im;
            a[(2 * r + 1, 2 * c + 1)] = z.re;
        }
    }
    AffineMap::new(a, vec![0.0; 4]).unwrap()
}

#[test]
fn distances_are_comparable_under_automorphisms() {
    let ball = unit_ball(2);
    let feet = boundary_samples(&ball, &[0.0; 4], 16).unwrap();
    let deltas = [0.1, 0.05, 0.025, 0.0125];
    let rep = distance_comparability(&unitary(), &ball, &ball, &feet, &deltas).unwrap();
    assert!((rep.constant - 1.0).abs() < 1e-9);

    // Möbius automorphism of Δ moving 0.5 to 0
    let a = Complex64::new(0.5, 0.0);
    let mobius = FnMap::new(
        2,
        move |x| {
            let z = Complex64::new(x[0], x[1]);
            let w = (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z);
            vec![w.re, w.im]
        },
        move |x| {
            let z = Complex64::new(x[0], x[1]);
            let d = (1.0 - a.norm_sqr()) / ((Complex64::new(1.0, 0.0) - a.conj() * z).powi(2));
            DMatrix::from_row_slice(2, 2, &[d.re, -d.im, d.im, d.re])
        },
    );
    let disc = unit_ball(1);
    let feet = boundary_samples(&disc, &[0.0, 0.0], 32).unwrap();
    let rep = distance_comparability(&mobius, &disc, &disc, &feet, &deltas).unwrap();
    // |φ'| on the circle ranges over [(1 - a)/(1 + a), (1 + a)/(1 - a)] = [1/3, 3]
    assert!(rep.constant.is_finite() && rep.constant <= 3.5 && rep.min >= 1.0 / 3.5, "{rep:?}");
}

fn siegel(shear: bool) -> BoxDomain {
    // Re z2 + |z1|^2 < 0, or its image under (z1, z2) -> (z1, z2 + z1^2)
    let x1 = Poly::var(4, 0);
    let y1 = Poly::var(4, 1);
    let mut p = Poly::var(4, 2).add(&ComplexPoly::abs2_z(2, 0));
    if shear {
        p = p.sub(&x1.mul(&x1).sub(&y1.mul(&y1)));
    }
    BoxDomain::cube(4, 2.0, Some(ScalarField::from_poly(p))).unwrap()
}

fn shear_map() -> PolyMap {
    let (x1, y1) = (Poly::var(4, 0), Poly::var(4, 1));
    PolyMap::new(vec![
        x1.clone(),
        y1.clone(),
        Poly::var(4, 2).add(&x1.mul(&x1).sub(&y1.mul(&y1))),
        Poly::var(4, 3).add(&x1.mul(&y1).scale(2.0)),
    ])
    .unwrap()
}

fn ray_points(d: &BoxDomain, t: &[f64]) -> Vec<Vec<f64>> {
    let rho = d.defining.as_ref().unwrap();
    dyadic_distances().iter().map(|&s| inner_point(rho, t, s).unwrap()).collect()
}

#[test]
fn identity_has_identity_matrix() {
    let ball = unit_ball(2);
    let pts = ray_points(&ball, &[0.6, 0.0, 0.0, 0.8]);
    let rep = tangent_map_anisotropy(&AffineMap::identity(4), &ball, &ball, &jst(4), &jst(4), &pts).unwrap();
    for s in &rep.samples {
        assert!((s.abs[0][0] - 1.0).abs() < 1e-12 && (s.abs[1][1] - 1.0).abs() < 1e-12);
        assert!(s.abs[0][1] < 1e-12 && s.abs[1][0] < 1e-12);
    }
    assert!(rep.exponents[0][0].abs() < 1e-9 && rep.exponents[1][1].abs() < 1e-9);
    assert!(rep.exponents[0][1].is_infinite() && rep.exponents[1][0].is_infinite());
    assert!(rep.consistent);
}

#[test]
fn unitary_and_shear_maps_respect_the_anisotropic_bounds() {
    let ball = unit_ball(2);
    let pts = ray_points(&ball, &[0.0, 0.6, 0.8, 0.0]);
    let rep = tangent_map_anisotropy(&unitary(), &ball, &ball, &jst(4), &jst(4), &pts).unwrap();
    assert!(rep.consistent, "{:?}", rep.exponents);
    for s in &rep.samples {
        assert!(s.abs.iter().flatten().all(|&a| a <= 1.0 + 1e-12));
    }

    let (d, d2) = (siegel(false), siegel(true));
    for t in [[0.0, 0.0, 0.0, 0.0], [0.3, 0.1, -0.1, 0.2], [-0.2, 0.4, -0.2, -0.5]] {
        let pts = ray_points(&d, &t);
        let rep = tangent_map_anisotropy(&shear_map(), &d, &d2, &jst(4), &jst(4), &pts).unwrap();
        assert!(rep.exponents[1][0] >= 0.4, "{:?}", rep.exponents);
        assert!(rep.consistent);
    }
}

#[test]
fn anisotropy_requires_holomorphic_maps() {
    let ball = unit_ball(2);
    let pts = ray_points(&ball, &[1.0, 0.0, 0.0, 0.0]);
    let conj = AffineMap::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, 1.0, 1.0])), vec![0.0; 4]).unwrap();
    let r = tangent_map_anisotropy(&conj, &ball, &ball, &jst(4), &jst(4), &pts);
    assert!(matches!(r, Err(Error::Precondition(_))));
}
