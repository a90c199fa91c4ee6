//! JSON file formats for fixtures, seeds and discs.

use std::fs;
use std::path::Path;

use acx_core::disc::{DeformationTensor, Disc};
use acx_core::field::{BoxDomain, ScalarField, StructureField};
use acx_core::maps::PolyMap;
use acx_core::poly::{ComplexPoly, Poly, PolyMatrix};
use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// Sparse real polynomial `Σ coeff · x^exponents` in `dim` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    pub dim: usize,
    pub terms: Vec<TermJson>,
}

impl PolyJson {
    pub fn from_poly(p: &Poly) -> Self {
        PolyJson {
            dim: p.nvars(),
            terms: p.terms().map(|(e, c)| TermJson { coeff: c, exponents: e.clone() }).collect(),
        }
    }

    pub fn to_poly(&self) -> Result<Poly> {
        for t in &self.terms {
            if t.exponents.len() != self.dim {
                bail!("exponent vector {:?} does not have {} entries", t.exponents, self.dim);
            }
            if !t.coeff.is_finite() {
                bail!("non-finite coefficient");
            }
        }
        Ok(Poly::from_terms(self.dim, self.terms.iter().map(|t| (t.coeff, t.exponents.clone()))))
    }
}

/// Polynomial matrix field, entries row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureJson {
    pub dim: usize,
    pub entries: Vec<PolyJson>,
}

impl StructureJson {
    pub fn from_field(j: &StructureField) -> Result<Self> {
        let m = j.as_poly().context("only polynomial structures can be serialized")?;
        Ok(StructureJson { dim: m.size(), entries: m.entries().iter().map(PolyJson::from_poly).collect() })
    }

    pub fn to_field(&self) -> Result<StructureField> {
        if self.entries.len() != self.dim * self.dim {
            bail!("a {0}x{0} structure needs {1} entries, got {2}", self.dim, self.dim * self.dim, self.entries.len());
        }
        let entries = self.entries.iter().map(PolyJson::to_poly).collect::<Result<Vec<_>>>()?;
        if entries.iter().any(|p| p.nvars() != self.dim) {
            bail!("structure entries must be polynomials in {} variables", self.dim);
        }
        Ok(StructureField::from_poly(PolyMatrix::new(self.dim, entries))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxJson {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// `q(λ, z) = λ P(z)` with complex polynomial entries, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorJson {
    pub n: usize,
    /// `(re, im)` parts per entry.
    pub entries: Vec<(PolyJson, PolyJson)>,
}

impl TensorJson {
    pub fn from_entries(n: usize, entries: &[ComplexPoly]) -> Self {
        TensorJson {
            n,
            entries: entries.iter().map(|e| (PolyJson::from_poly(&e.re), PolyJson::from_poly(&e.im))).collect(),
        }
    }

    pub fn to_tensor(&self) -> Result<DeformationTensor> {
        let entries = self
            .entries
            .iter()
            .map(|(re, im)| Ok(ComplexPoly { re: re.to_poly()?, im: im.to_poly()? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(DeformationTensor::linear(self.n, entries)?)
    }
}

/// One corpus file. Commands read the part they need: `--structure` reads
/// `structure`, `--domain` and `--hypersurface` read `defining` (and `box`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    /// Where the fixture shows up in the theory.
    pub anchor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defining: Option<PolyJson>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoxJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<TensorJson>,
    /// Torus `|z_k| = 1` in `C^n` for the Riemann-Hilbert commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torus: Option<usize>,
    /// Polynomial self-map of `R^dim`, one component per coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<PolyJson>>,
}

impl Fixture {
    pub fn new(name: &str, description: &str, anchor: &str) -> Self {
        Fixture {
            name: name.into(),
            description: description.into(),
            anchor: anchor.into(),
            structure: None,
            defining: None,
            bounds: None,
            tensor: None,
            torus: None,
            map: None,
        }
    }

    pub fn structure(&self) -> Result<StructureField> {
        self.structure.as_ref().with_context(|| format!("fixture {} has no structure", self.name))?.to_field()
    }

    pub fn defining(&self) -> Result<ScalarField> {
        let p = self.defining.as_ref().with_context(|| format!("fixture {} has no defining function", self.name))?;
        Ok(ScalarField::from_poly(p.to_poly()?))
    }

    /// `{ρ < 0}` inside the box, or the cube `[-2, 2]^dim` when no box is
    /// given.
    pub fn domain(&self) -> Result<BoxDomain> {
        let rho = self.defining()?;
        let dim = rho.dim();
        let (lo, hi) = match &self.bounds {
            Some(b) => (b.lo.clone(), b.hi.clone()),
            None => (vec![-2.0; dim], vec![2.0; dim]),
        };
        Ok(BoxDomain::new(lo, hi, Some(rho))?)
    }

    pub fn map(&self) -> Result<PolyMap> {
        let comps = self.map.as_ref().with_context(|| format!("fixture {} has no map", self.name))?;
        Ok(PolyMap::new(comps.iter().map(PolyJson::to_poly).collect::<Result<Vec<_>>>()?)?)
    }

    pub fn tensor(&self) -> Result<DeformationTensor> {
        match (&self.tensor, &self.structure) {
            (Some(t), _) => t.to_tensor(),
            (None, Some(s)) => Ok(DeformationTensor::from_structure(&s.to_field()?)),
            _ => bail!("fixture {} has neither a tensor nor a structure", self.name),
        }
    }
}

/// Reads a file as raw bytes plus the parsed value.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Vec<u8>, T)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let value = serde_json::from_slice(&bytes).with_context(|| format!("cannot parse {}", path.display()))?;
    Ok((bytes, value))
}

/// Holomorphic seed of the disc solver: Taylor coefficients per component,
/// each as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedJson {
    pub taylor: Vec<Vec<(f64, f64)>>,
    /// Pins `f(0)` and `∂_x f(0)` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<(f64, f64)>>,
    /// Deformation parameter `λ`.
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

pub fn complex_vec(v: &[(f64, f64)]) -> Vec<Complex64> {
    v.iter().map(|&(a, b)| Complex64::new(a, b)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridJson {
    #[serde(rename = "Nr")]
    pub nr: usize,
    #[serde(rename = "Ntheta")]
    pub ntheta: usize,
}

/// Disc coefficients `c_jk` of `ζ^j ζbar^k`, stored per component at index
/// `j (N + 1) + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscJson {
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub coefficients: Vec<Vec<(f64, f64)>>,
    pub grid: GridJson,
}

impl DiscJson {
    pub fn from_disc(d: &Disc) -> Self {
        let order = d.order();
        let coefficients = d
            .components()
            .iter()
            .map(|s| {
                let mut v = vec![(0.0, 0.0); (order + 1) * (order + 1)];
                for (j, k, c) in s.coefficients() {
                    v[j * (order + 1) + k] = (c.re, c.im);
                }
                v
            })
            .collect();
        let (nr, ntheta) = d.grid_shape();
        DiscJson { dim: d.dim(), n: order, coefficients, grid: GridJson { nr, ntheta } }
    }
}

/// Parses `"0,-1"` or `"0.5+0.2i,-1"` into complex coordinates, returned as
/// real coordinates `(x1, y1, x2, y2, ...)`.
pub fn parse_complex_list(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let c: Complex64 = part.trim().parse().map_err(|_| anyhow::anyhow!("cannot parse complex number {part:?}"))?;
        out.push(c.re);
        out.push(c.im);
    }
    Ok(out)
}

/// Parses a comma-separated list of reals.
pub fn parse_real_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("cannot parse number {p:?}")))
        .collect()
}
