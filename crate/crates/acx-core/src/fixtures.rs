//! Polynomial structures with `J^2 = -I` holding exactly in exact
//! arithmetic, used by tests, the corpus and the CLI.
//!
//! A block structure `J_D` with blocks `[[a, -(1 + a^2)], [1, -a]]` is
//! conjugated by `I + M`, where `M = u(x) w^T` with `w` constant and
//! `u(x) ⊥ w`. Then `M^2 = 0`, so `(I + M)^{-1} = I - M` stays polynomial.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disc::DeformationTensor;
use crate::error::{err, Result};
use crate::field::{j_st, BoxDomain, ScalarField, StructureField};
use crate::poly::{ComplexPoly, Poly, PolyMatrix};

/// Block structure with one `2x2` block `[[a, -(1 + a^2)], [1, -a]]` per
/// complex coordinate.
pub fn block_structure(a: &[Poly]) -> Result<StructureField> {
    let n = a.len();
    if n == 0 {
        return Err(err!(Dimension, "need at least one block"));
    }
    let nv = a[0].nvars();
    if nv != 2 * n || a.iter().any(|p| p.nvars() != nv) {
        return Err(err!(Dimension, "block entries must be polynomials in {} variables", 2 * n));
    }
    let dim = 2 * n;
    let mut e = vec![Poly::zero(nv); dim * dim];
    for (k, ak) in a.iter().enumerate() {
        let (r, c) = (2 * k, 2 * k);
        e[r * dim + c] = ak.clone();
        e[r * dim + c + 1] = Poly::constant(nv, -1.0).sub(&ak.mul(ak));
        e[(r + 1) * dim + c] = Poly::constant(nv, 1.0);
        e[(r + 1) * dim + c + 1] = ak.scale(-1.0);
    }
    StructureField::from_poly(PolyMatrix::new(dim, e))
}

/// `(I + u w^T) J (I - u w^T)`; requires `w . u(x) ≡ 0`.
pub fn conjugate_by_shear(j: &PolyMatrix, u: &[Poly], w: &[f64]) -> Result<PolyMatrix> {
    let dim = j.size();
    let nv = j.nvars();
    if u.len() != dim || w.len() != dim {
        return Err(err!(Dimension, "shear data must have length {dim}"));
    }
    let mut dot = Poly::zero(nv);
    for (ui, wi) in u.iter().zip(w) {
        dot = dot.add(&ui.scale(*wi));
    }
    if dot.prune(1e-14).max_abs_coeff() > 0.0 {
        return Err(err!(Parameter, "u(x) must be orthogonal to w"));
    }
    let m = |sign: f64| {
        let mut e = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let id = if r == c { Poly::constant(nv, 1.0) } else { Poly::zero(nv) };
                e.push(id.add(&u[r].scale(sign * w[c])));
            }
        }
        PolyMatrix::new(dim, e)
    };
    Ok(m(1.0).mul(j).mul(&m(-1.0)))
}

/// Random polynomial of total degree `1..=deg` (no constant term) with
/// coefficients uniform in `[-1, 1]`, scaled by `scale`.
pub fn random_poly(rng: &mut impl Rng, nvars: usize, deg: u32, scale: f64) -> Poly {
    let mut p = Poly::zero(nvars);
    let mut exps = vec![vec![0u32; nvars]];
    for _ in 0..deg {
        let mut next = Vec::new();
        for e in &exps {
            for v in 0..nvars {
                let mut f = e.clone();
                f[v] += 1;
                if !next.contains(&f) {
                    next.push(f);
                }
            }
        }
        for e in &next {
            p = p.add(&Poly::monomial(scale * rng.random_range(-1.0..1.0), e.clone()));
        }
        exps = next;
    }
    p
}

/// Seeded random structure `J = J_st + O(eps)` on `R^{2n}` with polynomial
/// entries and `J(0) = J_st`.
pub fn random_structure(seed: u64, n: usize, eps: f64) -> Result<StructureField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 2 * n;
    let a: Vec<Poly> = (0..n).map(|_| random_poly(&mut rng, dim, 2, eps)).collect();
    let base = block_structure(&a)?;
    let mut m = base.as_poly().expect("block structures are polynomial").clone();
    for _ in 0..2 {
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = DVector::from_vec(raw).normalize();
        let u = orthogonal_field(&mut rng, &w, dim, eps);
        m = conjugate_by_shear(&m, &u, w.as_slice())?;
    }
    StructureField::from_poly(m)
}

/// Polynomial vector field `u(x)` with `w . u ≡ 0`, vanishing at 0.
fn orthogonal_field(rng: &mut impl Rng, w: &DVector<f64>, dim: usize, eps: f64) -> Vec<Poly> {
    let mut u = vec![Poly::zero(dim); dim];
    for b in 0..dim {
        // e_b projected onto w^⊥
        let mut e = DVector::zeros(dim);
        e[b] = 1.0;
        let e = &e - w * w[b];
        let c = random_poly(rng, dim, 1, eps);
        for r in 0..dim {
            u[r] = u[r].add(&c.scale(e[r]));
        }
    }
    u
}

/// Diagonal fixture on `C^2`: blocks `a_1 = 0.05 x1 y1`, `a_2 = 0.1 x1`,
/// so the second block deviates from `J_st` at order `|z|`.
pub fn diagonal_fixture() -> StructureField {
    let x1 = Poly::var(4, 0);
    let y1 = Poly::var(4, 1);
    block_structure(&[x1.mul(&y1).scale(0.05), x1.scale(0.1)]).expect("valid blocks")
}

/// Perturbed fixture `J_st + O(0.05)` on `C^2` with fixed seed.
pub fn perturbed_fixture() -> StructureField {
    random_structure(7, 2, 0.05).expect("valid random structure")
}

/// Off-diagonal fixture on `C^2`: `J = J_st + N` where the only non-zero
/// block of `N` is `(2,1)`, equal to `x1 C` with `C` anticommuting with `J_st`.
/// `N J_st + J_st N = 0` and `N^2 = 0` give `J^2 = -I`.
pub fn offdiag_fixture() -> StructureField {
    let x1 = Poly::var(4, 0);
    let mut e: Vec<Poly> = j_st(4).iter().map(|_| Poly::zero(4)).collect();
    let js = j_st(4);
    for r in 0..4 {
        for c in 0..4 {
            e[r * 4 + c] = Poly::constant(4, js[(r, c)]);
        }
    }
    // C = [[1, 0], [0, -1]] anticommutes with the 2x2 block of J_st
    e[2 * 4] = x1.clone();
    e[3 * 4 + 1] = x1.scale(-1.0);
    StructureField::from_poly(PolyMatrix::new(4, e)).expect("valid structure")
}

/// Entry `(z^1)^2` style helpers for tensors.
pub fn z_power(n: usize, j: usize, k: u32) -> ComplexPoly {
    ComplexPoly::z(n, j).pow(k)
}

/// `|z - c|^2 - R^2` on `R^{2n}`.
pub fn ball_defining(center: &[f64], radius: f64) -> Poly {
    let nv = center.len();
    let mut p = Poly::constant(nv, -radius * radius);
    for (i, &c) in center.iter().enumerate() {
        let d = Poly::var(nv, i).add(&Poly::constant(nv, -c));
        p = p.add(&d.mul(&d));
    }
    p
}

/// Ball `B(c, R)` inside the box `c ± 1.1 R`.
pub fn ball_domain(center: &[f64], radius: f64) -> Result<BoxDomain> {
    let lo = center.iter().map(|c| c - 1.1 * radius).collect();
    let hi = center.iter().map(|c| c + 1.1 * radius).collect();
    BoxDomain::new(lo, hi, Some(ScalarField::from_poly(ball_defining(center, radius))))
}

/// Unit ball of `C^n`.
pub fn unit_ball(n: usize) -> BoxDomain {
    ball_domain(&vec![0.0; 2 * n], 1.0).expect("valid ball")
}

/// Tensor `0.2 y^4 (1 + x)` on `C`: real on `R` and of order 4 there.
pub fn reflection_tensor() -> DeformationTensor {
    let y4 = Poly::var(2, 1).pow(4);
    let p = y4.mul(&Poly::constant(2, 1.0).add(&Poly::var(2, 0))).scale(0.2);
    DeformationTensor::linear(1, vec![ComplexPoly::real(p)]).expect("scalar tensor")
}

/// Block structure `J_st + O(eps)` on `C^2` with seeded quadratic blocks,
/// `J(0) = J_st`.
pub fn perturbed_diagonal_fixture(seed: u64, eps: f64) -> StructureField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Poly> = (0..2).map(|_| random_poly(&mut rng, 4, 2, eps)).collect();
    block_structure(&a).expect("valid blocks")
}

/// `random_structure(seed, 2, 0.05)`.
pub fn perturbed_fixture_seeded(seed: u64) -> StructureField {
    random_structure(seed, 2, 0.05).expect("valid random structure")
}
