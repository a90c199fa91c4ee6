use acx_core::cotangent::{lift_structure, project_to_hypersurface, total_reality_test, LiftConfig, REALITY_ANGLE};
use acx_core::field::{c2_distance_scalar, c2_distance_to_const, j_st, ScalarField, StructureField};
use acx_core::fixtures;
use acx_core::math::loglog_slope;
use acx_core::poly::{ComplexPoly, Poly};
use acx_core::scaling::*;
use acx_core::structure::is_strictly_pseudoconvex;
use acx_core::Error;
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

fn x(i: usize) -> Poly {
    Poly::var(4, i)
}

/// `2 Re z2 + |z1|^2 + |z2|^2`: the ball of radius 1 about `(0, -1)`.
fn ball_model() -> Poly {
    x(2).scale(2.0).add(&ComplexPoly::abs2_z(2, 0)).add(&ComplexPoly::abs2_z(2, 1))
}

fn unit_sphere() -> ScalarField {
    ScalarField::from_poly(fixtures::ball_defining(&[0.0; 4], 1.0))
}

fn samples() -> Vec<Vec<f64>> {
    vec![vec![0.3, -0.2, 0.5, 0.1], vec![-0.7, 0.4, -0.1, -0.6], vec![0.0, 0.9, 0.2, 0.0], vec![0.5, 0.5, -0.5, 0.5]]
}

fn max_matrix_diff(a: &StructureField, b: &StructureField) -> f64 {
    samples().iter().map(|z| (a.matrix(z) - b.matrix(z)).amax()).fold(0.0, f64::max)
}

fn poly_diff(a: &Poly, b: &Poly) -> f64 {
    a.sub(b).max_abs_coeff()
}

#[test]
fn unit_dilation_is_identity() {
    let spec = DilationSpec::nonisotropic(1.0).unwrap();
    let j = fixtures::perturbed_fixture();
    assert_eq!(max_matrix_diff(&dilate_structure(&j, &spec).unwrap(), &j), 0.0);
    let rho = ScalarField::from_poly(ball_model().add(&x(0).mul(&x(3))));
    let d = dilate_defining(&rho, &spec).unwrap();
    assert_eq!(poly_diff(d.as_poly().unwrap(), rho.as_poly().unwrap()), 0.0);
    let iso = DilationSpec::isotropic(1.0).unwrap();
    assert_eq!(max_matrix_diff(&dilate_structure(&j, &iso).unwrap(), &j), 0.0);
}

#[test]
fn nonpositive_parameter_is_rejected() {
    for d in [0.0, -0.5, f64::NAN] {
        assert!(matches!(DilationSpec::nonisotropic(d), Err(Error::Parameter(_))));
        assert!(matches!(DilationSpec::isotropic(d), Err(Error::Parameter(_))));
    }
}

#[test]
fn nonisotropic_dilation_needs_c2() {
    let spec = DilationSpec::nonisotropic(0.5).unwrap();
    let j = StructureField::standard(6).unwrap();
    assert!(matches!(dilate_structure(&j, &spec), Err(Error::Dimension(_))));
    assert!(dilate_structure(&j, &DilationSpec::isotropic(0.5).unwrap()).is_ok());
}

#[test]
fn standard_structure_is_fixed_exactly() {
    let js = StructureField::standard(4).unwrap();
    for d in [0.3, 1e-3, 7.0, 0.0625] {
        for spec in [DilationSpec::nonisotropic(d).unwrap(), DilationSpec::isotropic(d).unwrap()] {
            let out = dilate_structure(&js, &spec).unwrap();
            for z in samples() {
                assert_eq!(out.matrix(&z), j_st(4));
            }
        }
    }
}

#[test]
fn point_map_scales_coordinates() {
    let spec = DilationSpec::nonisotropic(0.01).unwrap();
    let w = spec.apply(&[0.1, 0.2, 0.01, -0.03]).unwrap();
    let want = [1.0, 2.0, 1.0, -3.0];
    for (a, b) in w.iter().zip(want) {
        assert!((a - b).abs() < 1e-14, "{w:?}");
    }
    let back = spec.invert(&w).unwrap();
    assert!((back[3] + 0.03).abs() < 1e-16);
}

#[test]
fn composition_law_on_points_and_structures() {
    let j = fixtures::perturbed_fixture();
    let z = [0.3, -0.4, 0.25, 0.7];
    // powers of 4 keep the square roots exact
    for (d1, d2) in [(0.25, 0.0625), (0.25, 0.25)] {
        let (a, b) = (DilationSpec::nonisotropic(d1).unwrap(), DilationSpec::nonisotropic(d2).unwrap());
        let ab = a.compose(&b).unwrap();
        assert_eq!(a.apply(&b.apply(&z).unwrap()).unwrap(), ab.apply(&z).unwrap());
        let twice = dilate_structure(&dilate_structure(&j, &b).unwrap(), &a).unwrap();
        let once = dilate_structure(&j, &ab).unwrap();
        assert_eq!(max_matrix_diff(&twice, &once), 0.0);
    }
    for (d1, d2) in [(0.3, 0.7), (2.0, 0.01)] {
        for kind in [DilationKind::Nonisotropic, DilationKind::Isotropic] {
            let (a, b) = (DilationSpec::new(kind, d1).unwrap(), DilationSpec::new(kind, d2).unwrap());
            let ab = a.compose(&b).unwrap();
            let lhs = a.apply(&b.apply(&z).unwrap()).unwrap();
            let rhs = ab.apply(&z).unwrap();
            for (p, q) in lhs.iter().zip(&rhs) {
                assert!((p - q).abs() <= 1e-13 * q.abs().max(1.0));
            }
            let twice = dilate_structure(&dilate_structure(&j, &b).unwrap(), &a).unwrap();
            assert!(max_matrix_diff(&twice, &dilate_structure(&j, &ab).unwrap()) < 1e-12);
        }
    }
    let mixed = DilationSpec::isotropic(0.5).unwrap().compose(&DilationSpec::nonisotropic(0.5).unwrap());
    assert!(matches!(mixed, Err(Error::Parameter(_))));
}

#[test]
fn diagonal_entries_are_evaluated_at_the_dilated_point() {
    let j = fixtures::diagonal_fixture();
    let d = 0.01;
    let spec = DilationSpec::nonisotropic(d).unwrap();
    let out = dilate_structure(&j, &spec).unwrap();
    for w in samples() {
        let z = spec.invert(&w).unwrap();
        let (a, b) = (out.matrix(&w), j.matrix(&z));
        for (r, c) in [(0, 0), (0, 1), (1, 0), (2, 2), (2, 3), (3, 3)] {
            assert!((a[(r, c)] - b[(r, c)]).abs() < 1e-15);
        }
    }
}

#[test]
fn offdiagonal_entry_stays_bounded() {
    let j = fixtures::offdiag_fixture();
    for d in [0.01, 1e-4] {
        let out = dilate_structure(&j, &DilationSpec::nonisotropic(d).unwrap()).unwrap();
        let m = out.as_poly().unwrap();
        assert_eq!(poly_diff(m.get(2, 0), &x(0)), 0.0);
        assert_eq!(poly_diff(m.get(3, 1), &x(0).scale(-1.0)), 0.0);
    }
}

#[test]
fn diagonal_structure_converges_at_half_rate() {
    for j in [fixtures::diagonal_fixture(), fixtures::perturbed_diagonal_fixture(3, 0.05)] {
        let deltas: Vec<f64> = (2..=8).map(|k| 0.5f64.powi(k)).collect();
        let dist: Vec<f64> = deltas
            .iter()
            .map(|&d| {
                let out = dilate_structure(&j, &DilationSpec::nonisotropic(d).unwrap()).unwrap();
                c2_distance_to_const(&out, &j_st(4), 1.0, false, 5)
            })
            .collect();
        assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
        let slope = loglog_slope(&deltas, &dist);
        assert!(slope >= 0.4, "slope {slope}, {dist:?}");
    }
}

#[test]
fn defining_function_example() {
    let rho = ScalarField::from_poly(ball_model());
    let out = dilate_defining(&rho, &DilationSpec::nonisotropic(0.1).unwrap()).unwrap();
    let want = x(2).scale(2.0).add(&ComplexPoly::abs2_z(2, 0)).add(&ComplexPoly::abs2_z(2, 1).scale(0.1));
    assert!(poly_diff(out.as_poly().unwrap(), &want) < 1e-15);
}

#[test]
fn black_box_paths_match_polynomial_paths() {
    let p = ball_model().add(&x(0).mul(&x(3)).scale(0.4));
    let poly = ScalarField::from_poly(p.clone());
    let bb = ScalarField::from_fn(4, 1.0, move |z| p.eval(z));
    let j = fixtures::diagonal_fixture();
    let m = j.as_poly().unwrap().clone();
    let jbb = StructureField::from_fn(4, 1.0, move |z| m.eval(z)).unwrap();
    for spec in [DilationSpec::nonisotropic(0.05).unwrap(), DilationSpec::isotropic(0.2).unwrap()] {
        let (a, b) = (dilate_defining(&poly, &spec).unwrap(), dilate_defining(&bb, &spec).unwrap());
        for z in samples() {
            assert!((a.value(&z) - b.value(&z)).abs() < 1e-12);
        }
        let (a, b) = (dilate_structure(&j, &spec).unwrap(), dilate_structure(&jbb, &spec).unwrap());
        assert!(max_matrix_diff(&a, &b) < 1e-12);
    }
}

#[test]
fn isotropic_dilation_rescales_by_epsilon() {
    let rho = ScalarField::from_poly(ball_model());
    let eps = 0.2;
    let out = dilate_defining(&rho, &DilationSpec::isotropic(eps).unwrap()).unwrap();
    for w in samples() {
        let z: Vec<f64> = w.iter().map(|v| eps * v).collect();
        assert!((out.value(&w) - rho.value(&z) / eps).abs() < 1e-14);
    }
}

#[test]
fn model_is_a_fixed_point_of_the_dilation() {
    for (k, h) in [(Complex64::new(0.0, 0.0), 1.0), (Complex64::new(0.3, -0.2), 1.5)] {
        let model = ModelDomain::new(k, h).unwrap();
        for d in [0.1, 0.37, 2f64.powi(-10), 3.0] {
            let out = dilate_defining(&model.defining, &DilationSpec::nonisotropic(d).unwrap()).unwrap();
            assert_eq!(poly_diff(out.as_poly().unwrap(), model.defining.as_poly().unwrap()), 0.0);
        }
    }
}

#[test]
fn dilated_polynomial_converges_to_the_model() {
    let model = ModelDomain::new(Complex64::new(0.0, 0.0), 1.0).unwrap();
    // a |z2|^2 correction decays linearly, an x1 x2 term at rate 1/2
    for (extra, rate) in [(ComplexPoly::abs2_z(2, 1), 1.0), (x(0).mul(&x(2)).scale(0.5), 0.5)] {
        let rho = ScalarField::from_poly(model.defining.as_poly().unwrap().add(&extra));
        let deltas: Vec<f64> = (2..=8).map(|k| 0.5f64.powi(k)).collect();
        let err: Vec<f64> = deltas
            .iter()
            .map(|&d| {
                let out = dilate_defining(&rho, &DilationSpec::nonisotropic(d).unwrap()).unwrap();
                c2_distance_scalar(&out, &model.defining, 1.0, 5)
            })
            .collect();
        let slope = loglog_slope(&deltas, &err);
        assert!((slope - rate).abs() < 0.05, "slope {slope}, {err:?}");
    }
}

#[test]
fn model_rejects_nonpositive_h() {
    for h in [0.0, -1.0] {
        assert!(matches!(ModelDomain::new(Complex64::new(0.0, 0.0), h), Err(Error::ModelDegeneracy(_))));
    }
}

#[test]
fn normalized_point_is_left_alone() {
    let rho = ScalarField::from_poly(ball_model());
    let js = StructureField::standard(4).unwrap();
    let step = pinchuk_normalize(&rho, &js, &[0.0; 4]).unwrap();
    assert!((step.transform.a.clone() - nalgebra::DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
    assert_eq!(step.kappa, 1.0);
    for z in samples() {
        assert!((step.structure.matrix(&z) - j_st(4)).amax() < 1e-15);
        assert!((step.defining.value(&z) - rho.value(&z)).abs() < 1e-14);
    }
}

#[test]
fn sphere_normalization_at_i() {
    let t = [0.0, 0.0, 0.0, 1.0];
    let js = StructureField::standard(4).unwrap();
    let step = pinchuk_normalize(&unit_sphere(), &js, &t).unwrap();
    assert!(acx_core::linalg::norm2(&step.apply(&t)) < 1e-15);
    let g = step.defining.gradient(&[0.0; 4]);
    assert!((g - DVector::from_column_slice(&[0.0, 0.0, 2.0, 0.0])).amax() < 1e-10);
    // |z1|^2 + |1 + z2|^2 - 1 in the new chart
    let want = x(2).scale(2.0).add(&ComplexPoly::abs2_z(2, 0)).add(&ComplexPoly::abs2_z(2, 1));
    assert!(poly_diff(step.defining.as_poly().unwrap(), &want) < 1e-14);
    let model = model_domain(&unit_sphere(), &js, &t).unwrap();
    assert!((model.h - 1.0).abs() < 1e-12 && model.k.norm() < 1e-12, "{model:?}");
}

#[test]
fn normal_maps_to_the_real_z2_axis() {
    let js = StructureField::standard(4).unwrap();
    let sphere = unit_sphere();
    for start in [[0.6, 0.0, 0.0, 0.8], [0.3, -0.5, 0.2, 0.4], [-0.1, 0.2, 0.9, 0.3]] {
        let t = project_to_hypersurface(&sphere, &start, 1e-14).unwrap();
        let step = pinchuk_normalize(&sphere, &js, &t).unwrap();
        let img = &step.transform.a * sphere.gradient(&t);
        assert!(img[0].abs() + img[1].abs() + img[3].abs() < 1e-12 * img[2].abs(), "{img:?}");
        assert!(img[2] > 0.0);
    }
    let j = fixtures::perturbed_diagonal_fixture(5, 0.05);
    let rho = ScalarField::from_poly(ball_model());
    let step = pinchuk_normalize(&rho, &j, &[0.0; 4]).unwrap();
    let img = &step.transform.a * rho.gradient(&[0.0; 4]);
    assert!(img[0].abs() + img[1].abs() + img[3].abs() < 1e-12);
}

#[test]
fn normalization_handles_nonstandard_structure_at_the_point() {
    let j = fixtures::perturbed_fixture();
    let sphere = unit_sphere();
    let t = project_to_hypersurface(&sphere, &[0.4, 0.3, -0.2, 0.5], 1e-14).unwrap();
    let step = pinchuk_normalize(&sphere, &j, &t).unwrap();
    assert!((step.structure.matrix(&[0.0; 4]) - j_st(4)).amax() <= 1e-10);
    let l = &step.l;
    assert!((l * j.matrix(&t) - j_st(4) * l).amax() > 0.0);
    // L K L^{-1} = J_st with K the structure in the α chart
    let a = &step.alpha;
    let k = a * j.matrix(&t) * a.clone().try_inverse().unwrap();
    assert!((l * k * l.clone().try_inverse().unwrap() - j_st(4)).amax() < 1e-10);
}

#[test]
fn normalization_errors() {
    let js = StructureField::standard(4).unwrap();
    assert!(matches!(pinchuk_normalize(&unit_sphere(), &js, &[0.5, 0.0, 0.0, 0.0]), Err(Error::Domain(_))));
    let cone = ScalarField::from_poly(x(2).mul(&x(2)).sub(&x(0).mul(&x(0))));
    assert!(matches!(pinchuk_normalize(&cone, &js, &[0.0; 4]), Err(Error::Degenerate(_))));
}

#[test]
fn model_extraction_reads_k_and_h() {
    let js = StructureField::standard(4).unwrap();
    let re_z1_sq = x(0).mul(&x(0)).sub(&x(1).mul(&x(1)));
    let rho = ScalarField::from_poly(x(2).scale(2.0).add(&ComplexPoly::abs2_z(2, 0)).add(&re_z1_sq));
    let model = model_domain(&rho, &js, &[0.0; 4]).unwrap();
    assert!((model.h - 1.0).abs() < 1e-12);
    assert!((model.k - Complex64::new(0.5, 0.0)).norm() < 1e-12, "{model:?}");
    // Im(z1^2) = 2 x y enters K with an imaginary coefficient
    let im = x(0).mul(&x(1)).scale(2.0);
    let rho = ScalarField::from_poly(x(2).scale(2.0).add(&ComplexPoly::abs2_z(2, 0).scale(2.0)).add(&im.scale(0.6)));
    let model = model_domain(&rho, &js, &[0.0; 4]).unwrap();
    assert!((model.h - 2.0).abs() < 1e-12 && (model.k - Complex64::new(0.0, -0.3)).norm() < 1e-12, "{model:?}");
    let back = model.defining.as_poly().unwrap();
    assert!(poly_diff(back, rho.as_poly().unwrap()) < 1e-12);
}

#[test]
fn model_defining_function_is_pseudoconvex() {
    let js = StructureField::standard(4).unwrap();
    let model = ModelDomain::new(Complex64::new(0.4, 0.1), 1.2).unwrap();
    let pts: Vec<Vec<f64>> = [[0.3, 0.1, 0.0, 0.2], [-0.5, 0.4, 0.0, -0.3], [0.0, 0.0, 0.0, 0.0]]
        .iter()
        .map(|s| project_to_hypersurface(&model.defining, s, 1e-14).unwrap())
        .collect();
    assert!(is_strictly_pseudoconvex(&js, &model.defining, &pts).unwrap().pass);
}

#[test]
fn flat_and_concave_boundaries_have_no_model() {
    let js = StructureField::standard(4).unwrap();
    for p in [x(2).scale(2.0), x(2).scale(2.0).sub(&ComplexPoly::abs2_z(2, 0))] {
        let rho = ScalarField::from_poly(p);
        assert!(matches!(model_domain(&rho, &js, &[0.0; 4]), Err(Error::ModelDegeneracy(_))));
    }
}

#[test]
fn boundary_projection_on_the_sphere() {
    let p = [0.3, 0.1, -0.2, 0.4];
    let (t, d) = boundary_projection(&unit_sphere(), &p).unwrap();
    let r = acx_core::linalg::norm2(&p);
    assert!((d - (1.0 - r)).abs() < 1e-12);
    for (a, b) in t.iter().zip(p) {
        assert!((a - b / r).abs() < 1e-12);
    }
}

#[test]
fn boundary_projection_is_the_nearest_point() {
    let rho = ScalarField::from_poly(ball_model().add(&x(0).mul(&x(2)).scale(0.5)));
    let p = [0.05, -0.02, -0.1, 0.03];
    let (t, d) = boundary_projection(&rho, &p).unwrap();
    // foot condition: p - t is parallel to the gradient at t
    let g = rho.gradient(&t);
    let v = DVector::from_iterator(4, p.iter().zip(&t).map(|(a, b)| a - b));
    assert!((v.norm() - d).abs() < 1e-14);
    assert!((v.dot(&g).abs() - v.norm() * g.norm()).abs() < 1e-10 * v.norm() * g.norm());
    // no sampled boundary point is closer
    for s in 0..200 {
        let a = s as f64 * 0.1;
        let dir = [a.cos() * 0.3, a.sin() * 0.3, (0.7 * a).cos() * 0.2, 0.0];
        let q: Vec<f64> = t.iter().zip(dir).map(|(x, y)| x + 0.05 * y).collect();
        if let Ok(qb) = project_to_hypersurface(&rho, &q, 1e-14) {
            let dq = acx_core::linalg::norm2(&qb.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>());
            assert!(dq >= d - 1e-12);
        }
    }
}

#[test]
fn sequence_is_stationary_on_the_exact_model() {
    let model = ModelDomain::new(Complex64::new(0.0, 0.0), 1.0).unwrap();
    let js = StructureField::standard(4).unwrap();
    let pts: Vec<Vec<f64>> = (1..=7).map(|k| vec![0.0, 0.0, -(0.5f64.powi(k)), 0.0]).collect();
    let seq = scaling_sequence(&model.defining, &js, &[0.0; 4], &pts, &ScalingConfig::default()).unwrap();
    for (k, s) in seq.steps.iter().enumerate() {
        assert_eq!(s.delta, 0.5f64.powi(k as i32 + 1));
        assert!(s.point_error < 1e-15, "{:?}", s.point_hat);
        assert!(s.structure_sup == 0.0 && s.structure_c2 < 1e-12);
        assert!(s.defining_c2 < 1e-13, "{}", s.defining_c2);
    }
}

#[test]
fn sequence_converges_for_a_perturbed_diagonal_structure() {
    let j = fixtures::perturbed_diagonal_fixture(11, 0.05);
    let rho = ScalarField::from_poly(x(2).scale(2.0).add(&ComplexPoly::abs2_z(2, 0)).add(&x(0).mul(&x(2)).scale(0.5)));
    let pts: Vec<Vec<f64>> = (3..=9).map(|k| vec![0.0, 0.0, -(0.5f64.powi(k)), 0.0]).collect();
    let seq = scaling_sequence(&rho, &j, &[0.0; 4], &pts, &ScalingConfig::default()).unwrap();
    let sup: Vec<f64> = seq.steps.iter().map(|s| s.structure_sup).collect();
    assert!(sup.windows(2).all(|w| w[1] < w[0]), "{sup:?}");
    let deltas: Vec<f64> = seq.steps.iter().map(|s| s.delta).collect();
    let c2: Vec<f64> = seq.steps.iter().map(|s| s.structure_c2).collect();
    assert!(loglog_slope(&deltas, &c2) >= 0.4, "{c2:?}");
    let rho_err: Vec<f64> = seq.steps.iter().map(|s| s.defining_c2).collect();
    let slope = loglog_slope(&deltas, &rho_err);
    assert!((slope - 0.5).abs() < 0.1, "slope {slope}, {rho_err:?}");
    let pe: Vec<f64> = seq.steps.iter().map(|s| s.point_error).collect();
    // p - t^k is normal at t^k, so its image lies on the negative real z2 axis
    assert!(pe.iter().all(|&e| e < 1e-10), "{pe:?}");
}

#[test]
fn offdiagonal_linear_term_blocks_convergence() {
    let j = fixtures::offdiag_fixture();
    let rho = ScalarField::from_poly(ball_model());
    let pts: Vec<Vec<f64>> = (3..=7).map(|k| vec![0.0, 0.0, -(0.5f64.powi(k)), 0.0]).collect();
    let seq = scaling_sequence(&rho, &j, &[0.0; 4], &pts, &ScalingConfig::default()).unwrap();
    for s in &seq.steps {
        assert!((s.structure_sup - 1.0).abs() < 1e-12, "{}", s.structure_sup);
    }
}

#[test]
fn sequence_rejects_exterior_points() {
    let js = StructureField::standard(4).unwrap();
    let rho = ScalarField::from_poly(ball_model());
    let pts = vec![vec![0.0, 0.0, 0.1, 0.0]];
    let r = scaling_sequence(&rho, &js, &[0.0; 4], &pts, &ScalingConfig::default());
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn dilated_structure_keeps_the_model_conormal_totally_real() {
    let j = fixtures::perturbed_diagonal_fixture(11, 0.05);
    let dj = dilate_structure(&j, &DilationSpec::nonisotropic(1e-2).unwrap()).unwrap();
    let lift = lift_structure(&dj, &LiftConfig { per_axis: 3, ..LiftConfig::default() }).unwrap();
    let model = ModelDomain::new(Complex64::new(0.2, 0.0), 1.0).unwrap();
    let pts: Vec<(Vec<f64>, f64)> = [[0.3, 0.1, 0.0, 0.2], [-0.4, 0.2, 0.0, -0.5], [0.1, -0.6, 0.0, 0.3]]
        .iter()
        .zip([1.0, -0.7, 2.0])
        .map(|(s, c)| (project_to_hypersurface(&model.defining, s, 1e-14).unwrap(), c))
        .collect();
    let rep = total_reality_test(&model.defining, &lift, &pts, REALITY_ANGLE).unwrap();
    assert!(rep.pass, "{rep:?}");
    let flat = ScalarField::from_poly(x(2));
    let pts: Vec<(Vec<f64>, f64)> = pts.iter().map(|(z, c)| (vec![z[0], z[1], 0.0, z[3]], *c)).collect();
    let rep = total_reality_test(&flat, &lift, &pts, REALITY_ANGLE).unwrap();
    assert!(!rep.pass, "{rep:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dilation_round_trips(z in prop::collection::vec(-2.0f64..2.0, 4), ld in -8.0f64..2.0) {
        let spec = DilationSpec::nonisotropic(ld.exp()).unwrap();
        let back = spec.invert(&spec.apply(&z).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&z) {
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn dilated_structures_square_to_minus_identity(seed in 0u64..1000, ld in -6.0f64..0.0) {
        let j = fixtures::perturbed_fixture_seeded(seed);
        let out = dilate_structure(&j, &DilationSpec::nonisotropic(ld.exp()).unwrap()).unwrap();
        for z in samples() {
            let m = out.matrix(&z);
            let r = (&m * &m + nalgebra::DMatrix::<f64>::identity(4, 4)).amax();
            prop_assert!(r <= 1e-9 * (1.0 + m.amax() * m.amax()), "{r:e}");
        }
    }

    #[test]
    fn normalization_invariants_hold_on_the_sphere(
        s in prop::collection::vec(-1.0f64..1.0, 4),
        seed in 0u64..100,
    ) {
        prop_assume!(acx_core::linalg::norm2(&s) > 0.2);
        let sphere = unit_sphere();
        let t = project_to_hypersurface(&sphere, &s, 1e-14).unwrap();
        let j = fixtures::perturbed_fixture_seeded(seed);
        let step = pinchuk_normalize(&sphere, &j, &t).unwrap();
        prop_assert!(acx_core::linalg::norm2(&step.apply(&t)) < 1e-12);
        prop_assert!((step.structure.matrix(&[0.0; 4]) - j_st(4)).amax() <= 1e-10);
        prop_assert!(step.defining.value(&[0.0; 4]).abs() < 1e-12);
    }
}
