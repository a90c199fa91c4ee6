//! Real polynomials in the real coordinates `(x1, y1, ..., xn, yn)` of `C^n`,
//! plus small helpers for building them from complex expressions.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::math::powi;

/// Sparse real polynomial. Terms are keyed by exponent vectors, so the
/// representation is canonical and iteration order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(c, vec![0; nvars]);
        p
    }

    /// The coordinate function `x_i` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(1.0, e)
    }

    pub fn monomial(coeff: f64, exps: Vec<u32>) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(coeff, exps);
        p
    }

    /// Builds a polynomial from `(coeff, exponents)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (f64, Vec<u32>)>) -> Self {
        let mut p = Self::zero(nvars);
        for (c, e) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            p.add_term(c, e);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    fn add_term(&mut self, c: f64, e: Vec<u32>) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(e).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut s = 0.0;
        for (e, &c) in &self.terms {
            let mut t = c;
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= powi(*xi, k as i32);
                }
            }
            s += t;
        }
        s
    }

    pub fn deriv(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.add_term(c * e[i] as f64, f);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(c, e.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            out.add_term(c * s, e.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(c1 * c2, e);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.nvars, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Substitutes `x_c -> factor(e) * x_c` termwise: each coefficient is
    /// multiplied by `factor(exponents)`.
    pub fn map_coeffs(&self, factor: impl Fn(&[u32]) -> f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            out.add_term(c * factor(e), e.clone());
        }
        out
    }

    /// Composition `w -> p(A w + b)`, by nested Horner evaluation on a dense
    /// coefficient cube.
    pub fn compose_affine(&self, a: &DMatrix<f64>, b: &[f64]) -> Self {
        let n = self.nvars;
        assert_eq!(a.nrows(), n);
        let m = a.ncols();
        let d = self.degree() as usize;
        let base = d + 1;
        let strides: Vec<usize> = (0..m).map(|v| base.pow(v as u32)).collect();
        let size = base.pow(m as u32);
        let terms: Vec<(&Vec<u32>, f64)> = self.terms.iter().map(|(e, &c)| (e, c)).collect();
        let cx = Cube { a, b, strides: &strides, size, n };
        let dense = cx.horner(&terms, 0);
        let mut out = Poly::zero(m);
        for (i, &c) in dense.iter().enumerate() {
            if c != 0.0 {
                let e = (0..m).map(|v| ((i / strides[v]) % base) as u32).collect();
                out.terms.insert(e, c);
            }
        }
        out
    }

    /// Composition `w -> p(s_1(w), ..., s_n(w))`.
    pub fn compose(&self, subs: &[Poly]) -> Self {
        assert_eq!(subs.len(), self.nvars);
        let m = subs.first().map(|s| s.nvars).unwrap_or(0);
        let mut out = Poly::zero(m);
        for (e, &c) in &self.terms {
            let mut t = Poly::constant(m, c);
            for (var, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.mul(&subs[var].pow(k));
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Drops terms of total degree above `deg`.
    pub fn truncate(&self, deg: u32) -> Self {
        let mut out = self.clone();
        out.terms.retain(|e, _| e.iter().sum::<u32>() <= deg);
        out
    }

    /// Coefficient of the monomial with exponents `e` (zero if absent).
    pub fn coeff(&self, e: &[u32]) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    /// Drops coefficients with magnitude below `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        let mut out = self.clone();
        out.terms.retain(|_, c| c.abs() > tol);
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// A complex-valued polynomial `re + i im` in the same real variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    pub re: Poly,
    pub im: Poly,
}

impl ComplexPoly {
    pub fn real(p: Poly) -> Self {
        let n = p.nvars();
        Self { re: p, im: Poly::zero(n) }
    }

    pub fn constant(nvars: usize, re: f64, im: f64) -> Self {
        Self { re: Poly::constant(nvars, re), im: Poly::constant(nvars, im) }
    }

    /// The holomorphic coordinate `z^j = x_j + i y_j` (0-based `j`).
    pub fn z(n: usize, j: usize) -> Self {
        Self { re: Poly::var(2 * n, 2 * j), im: Poly::var(2 * n, 2 * j + 1) }
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: self.im.scale(-1.0) }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    pub fn scale(&self, a: f64, b: f64) -> Self {
        Self {
            re: self.re.scale(a).sub(&self.im.scale(b)),
            im: self.re.scale(b).add(&self.im.scale(a)),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let n = self.re.nvars();
        let mut out = Self::constant(n, 1.0, 0.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// `|z^j|^2` as a real polynomial.
    pub fn abs2_z(n: usize, j: usize) -> Poly {
        let x = Poly::var(2 * n, 2 * j);
        let y = Poly::var(2 * n, 2 * j + 1);
        x.mul(&x).add(&y.mul(&y))
    }
}

/// Square matrix of polynomials, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    size: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn new(size: usize, entries: Vec<Poly>) -> Self {
        assert_eq!(entries.len(), size * size);
        Self { size, entries }
    }

    pub fn constant(m: &DMatrix<f64>, nvars: usize) -> Self {
        let size = m.nrows();
        let entries = (0..size * size).map(|k| Poly::constant(nvars, m[(k / size, k % size)])).collect();
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nvars(&self) -> usize {
        self.entries.first().map(|p| p.nvars()).unwrap_or(0)
    }

    pub fn get(&self, r: usize, c: usize) -> &Poly {
        &self.entries[r * self.size + c]
    }

    pub fn entries(&self) -> &[Poly] {
        &self.entries
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |r, c| self.get(r, c).eval(x))
    }

    pub fn map(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        Self { size: self.size, entries: self.entries.iter().map(f).collect() }
    }

    pub fn deriv(&self, i: usize) -> Self {
        self.map(|p| p.deriv(i))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            size: self.size,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.size;
        let nv = self.nvars();
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let mut s = Poly::zero(nv);
                for k in 0..n {
                    s = s.add(&self.get(r, k).mul(o.get(k, c)));
                }
                entries.push(s);
            }
        }
        Self { size: n, entries }
    }

    /// `L * self * R` for constant matrices.
    pub fn conjugate_const(&self, l: &DMatrix<f64>, r: &DMatrix<f64>) -> Self {
        let n = self.size;
        let nv = self.nvars();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Poly::zero(nv);
                for a in 0..n {
                    for b in 0..n {
                        let w = l[(i, a)] * r[(b, j)];
                        if w != 0.0 {
                            s = s.add(&self.get(a, b).scale(w));
                        }
                    }
                }
                entries.push(s);
            }
        }
        Self { size: n, entries }
    }
}

/// Dense workspace for affine composition: coefficient of `w^e` lives at
/// `Σ e_v strides[v]`.
struct Cube<'a> {
    a: &'a DMatrix<f64>,
    b: &'a [f64],
    strides: &'a [usize],
    size: usize,
    n: usize,
}

impl Cube<'_> {
    /// `Σ c_e Π_{u >= var} s_u^{e_u}` over terms sharing the exponents of
    /// earlier variables; `terms` are in lexicographic order.
    fn horner(&self, terms: &[(&Vec<u32>, f64)], var: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        if var == self.n {
            out[0] = terms.iter().map(|t| t.1).sum();
            return out;
        }
        let top = terms.last().map_or(0, |t| t.0[var]);
        let mut end = terms.len();
        for k in (0..=top).rev() {
            if k < top {
                out = self.mul_linear(&out, var);
            }
            let start = terms[..end].partition_point(|t| t.0[var] < k);
            if start < end {
                let inner = self.horner(&terms[start..end], var + 1);
                for (o, i) in out.iter_mut().zip(&inner) {
                    *o += i;
                }
            }
            end = start;
        }
        out
    }

    /// Multiplies by `s_var(w) = b_var + Σ_d a[var, d] w_d`.
    fn mul_linear(&self, p: &[f64], var: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        let row = self.a.row(var);
        for (i, &c) in p.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            out[i] += self.b[var] * c;
            for (d, &s) in self.strides.iter().enumerate() {
                let ad = row[d];
                if ad != 0.0 {
                    out[i + s] += ad * c;
                }
            }
        }
        out
    }
}


/// Several polynomials in the same variables packed for fast evaluation:
/// shared monomials are evaluated once per point from a power table.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPolys {
    nvars: usize,
    max_exp: usize,
    /// Distinct exponent vectors, concatenated.
    monomials: Vec<u32>,
    /// Term ranges per polynomial into `terms`.
    offsets: Vec<usize>,
    /// `(monomial index, coefficient)`.
    terms: Vec<(usize, f64)>,
}

impl FlatPolys {
    pub fn new(polys: &[Poly]) -> Self {
        let nvars = polys.first().map(|p| p.nvars()).unwrap_or(0);
        let mut index: BTreeMap<&Vec<u32>, usize> = BTreeMap::new();
        let mut monomials = Vec::new();
        let mut offsets = vec![0];
        let mut terms = Vec::new();
        let mut max_exp = 0;
        for p in polys {
            for (e, c) in p.terms() {
                let next = index.len();
                let k = *index.entry(e).or_insert_with(|| {
                    monomials.extend_from_slice(e);
                    next
                });
                max_exp = max_exp.max(e.iter().copied().max().unwrap_or(0) as usize);
                terms.push((k, c));
            }
            offsets.push(terms.len());
        }
        Self { nvars, max_exp, monomials, offsets, terms }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values of all polynomials at `x`, written to `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let (nv, stride) = (self.nvars, self.max_exp + 1);
        let mut table = vec![1.0; nv * stride];
        for (i, &xi) in x.iter().enumerate().take(nv) {
            for k in 1..stride {
                table[i * stride + k] = table[i * stride + k - 1] * xi;
            }
        }
        let mono: Vec<f64> = if nv == 0 {
            vec![1.0; self.monomials.len().max(1)]
        } else {
            self.monomials
                .chunks(nv)
                .map(|e| e.iter().enumerate().fold(1.0, |v, (i, &k)| v * table[i * stride + k as usize]))
                .collect()
        };
        for (p, slot) in out.iter_mut().enumerate().take(self.len()) {
            *slot = self.terms[self.offsets[p]..self.offsets[p + 1]].iter().map(|&(k, c)| c * mono[k]).sum();
        }
    }
}
