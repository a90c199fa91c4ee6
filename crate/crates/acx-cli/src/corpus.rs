//! Shipped fixture corpus: generation, listing and lookup.

use std::fs;
use std::path::{Path, PathBuf};

use acx_core::field::StructureField;
use acx_core::fixtures;
use acx_core::poly::{ComplexPoly, Poly};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::format::{BoxJson, Fixture, PolyJson, SeedJson, StructureJson, TensorJson};

/// Environment variable overriding the corpus directory.
pub const CORPUS_ENV: &str = "ACX_CORPUS";

/// `$ACX_CORPUS`, else the `corpus/` directory of the source tree.
pub fn corpus_dir() -> PathBuf {
    match std::env::var_os(CORPUS_ENV) {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus"),
    }
}

/// Resolves a fixture argument: an existing path, else a file name in the
/// corpus directory (with or without `.json`).
pub fn resolve(arg: &str) -> PathBuf {
    let p = PathBuf::from(arg);
    if p.exists() {
        return p;
    }
    let dir = corpus_dir();
    let with_ext = dir.join(format!("{arg}.json"));
    if with_ext.exists() {
        return with_ext;
    }
    dir.join(arg)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn structure(j: &StructureField) -> Option<StructureJson> {
    Some(StructureJson::from_field(j).expect("shipped structures are polynomial"))
}

fn x(n: usize, i: usize) -> Poly {
    Poly::var(n, i)
}

/// The shipped fixtures, keyed by file stem.
pub fn builtin() -> Vec<Fixture> {
    let mut out = Vec::new();

    let mut f = Fixture::new("jst", "Standard structure J_st on C^2", "J_st, the model structure");
    f.structure = structure(&StructureField::standard(4).unwrap());
    out.push(f);

    let mut f = Fixture::new("jst-c1", "Standard structure J_st on C", "J_st on the unit disc");
    f.structure = structure(&StructureField::standard(2).unwrap());
    out.push(f);

    let mut f = Fixture::new(
        "perturbed",
        "J_st + O(0.05) on C^2: quadratic block structure conjugated by two polynomial shears (seed 7)",
        "randomized polynomial structures J = J_st + εP for the cotangent lift",
    );
    f.structure = structure(&fixtures::perturbed_fixture());
    out.push(f);

    let mut f = Fixture::new(
        "diagonal",
        "Diagonal structure on C^2 with blocks a1 = 0.05 x1 y1, a2 = 0.1 x1",
        "diagonal coordinates: entries a_jj and the tangent disc with (f^2)_{ζζbar}(0) = 0",
    );
    f.structure = structure(&fixtures::diagonal_fixture());
    out.push(f);

    let mut f = Fixture::new(
        "diagonal-perturbed",
        "Diagonal structure J_st + O(0.05) on C^2 with seeded quadratic blocks (seed 11)",
        "scaling sequence: dilated structures converge to J_st",
    );
    f.structure = structure(&fixtures::perturbed_diagonal_fixture(11, 0.05));
    out.push(f);

    let mut f = Fixture::new(
        "offdiag",
        "J_st + N on C^2 with N supported in block (2,1), equal to x1 diag(1, -1)",
        "off-diagonal entry a21(z) = z1 stays bounded under non-isotropic dilation",
    );
    f.structure = structure(&fixtures::offdiag_fixture());
    out.push(f);

    let mut f = Fixture::new("disc", "Unit disc |z|^2 - 1 < 0 in C", "Schwarz lemma: K(0, 1) = 1");
    f.defining = Some(PolyJson::from_poly(&fixtures::ball_defining(&[0.0, 0.0], 1.0)));
    f.bounds = Some(BoxJson { lo: vec![-1.1; 2], hi: vec![1.1; 2] });
    out.push(f);

    let mut f = Fixture::new("sphere", "Unit ball |z|^2 - 1 < 0 in C^2", "unit sphere S^3: strictly pseudoconvex, totally real conormal");
    f.defining = Some(PolyJson::from_poly(&fixtures::ball_defining(&[0.0; 4], 1.0)));
    f.bounds = Some(BoxJson { lo: vec![-1.1; 4], hi: vec![1.1; 4] });
    out.push(f);

    let mut f = Fixture::new(
        "model",
        "Model domain 2 Re z2 + |z1|^2 < 0 in C^2",
        "model domain Σ with K = 0, H = |z1|^2 and its boundary Γ0",
    );
    f.defining = Some(PolyJson::from_poly(&x(4, 2).scale(2.0).add(&ComplexPoly::abs2_z(2, 0))));
    f.bounds = Some(BoxJson { lo: vec![-2.0; 4], hi: vec![2.0; 4] });
    out.push(f);

    let mut f = Fixture::new(
        "model-tilted",
        "2 Re z2 + |z1|^2 + Re(z1^2) + 0.5 x1 x2 < 0 in C^2",
        "Taylor extraction of K(z1, 0) = z1^2 / 2 and H(z1, 0) = |z1|^2",
    );
    let re_z1_sq = x(4, 0).mul(&x(4, 0)).sub(&x(4, 1).mul(&x(4, 1)));
    let p = x(4, 2).scale(2.0).add(&ComplexPoly::abs2_z(2, 0)).add(&re_z1_sq).add(&x(4, 0).mul(&x(4, 2)).scale(0.5));
    f.defining = Some(PolyJson::from_poly(&p));
    f.bounds = Some(BoxJson { lo: vec![-2.0; 4], hi: vec![2.0; 4] });
    out.push(f);

    let mut f = Fixture::new(
        "ball-model",
        "2 Re z2 + |z1|^2 + |z2|^2 < 0: unit ball about (0, -1)",
        "dilations ρ_δ = 2 Re w2 + |w1|^2 + δ |w2|^2 tending to the model",
    );
    f.defining = Some(PolyJson::from_poly(&x(4, 2).scale(2.0).add(&ComplexPoly::abs2_z(2, 0)).add(&ComplexPoly::abs2_z(2, 1))));
    f.bounds = Some(BoxJson { lo: vec![-2.5, -2.5, -2.5, -2.5], hi: vec![2.5, 2.5, 2.5, 2.5] });
    out.push(f);

    let mut f = Fixture::new("flat", "Levi-flat hyperplane Re z2 = 0 in C^2", "{Re z2 = 0}: conormal bundle is not totally real");
    f.defining = Some(PolyJson::from_poly(&x(4, 2)));
    out.push(f);

    let mut f = Fixture::new("torus-c1", "Circle |z| = 1 with f0(ζ) = ζ", "Bishop discs: 3n-dimensional kernel, n = 1");
    f.torus = Some(1);
    out.push(f);

    let mut f = Fixture::new("torus-c2", "Torus |z1| = |z2| = 1 with f0(ζ) = (ζ, ζ)", "Bishop discs: 3n-dimensional kernel, n = 2");
    f.torus = Some(2);
    out.push(f);

    let mut f = Fixture::new(
        "reflection",
        "Disc-equation tensor q(λ, z) = 0.2 λ y^4 (1 + x) on C, vanishing to order 4 on R",
        "reflection principle across a totally real boundary",
    );
    let y4 = x(2, 1).pow(4);
    let q = y4.mul(&Poly::constant(2, 1.0).add(&x(2, 0))).scale(0.2);
    f.tensor = Some(TensorJson::from_entries(1, &[ComplexPoly::real(q)]));
    out.push(f);

    let siegel = x(4, 2).add(&ComplexPoly::abs2_z(2, 0));
    let re_z1_sq = x(4, 0).mul(&x(4, 0)).sub(&x(4, 1).mul(&x(4, 1)));

    let mut f = Fixture::new("siegel", "Siegel domain Re z2 + |z1|^2 < 0 in C^2", "unbounded model for tangent-map anisotropy");
    f.defining = Some(PolyJson::from_poly(&siegel));
    out.push(f);

    let mut f = Fixture::new(
        "siegel-sheared",
        "Re z2 + |z1|^2 - Re(z1^2) < 0: image of the Siegel domain under the shear",
        "target domain of the shear (z1, z2) -> (z1, z2 + z1^2)",
    );
    f.defining = Some(PolyJson::from_poly(&siegel.sub(&re_z1_sq)));
    out.push(f);

    let mut f = Fixture::new(
        "shear",
        "Holomorphic shear (z1, z2) -> (z1, z2 + z1^2) on C^2",
        "biholomorphism with an anisotropic tangent map near the boundary",
    );
    f.map = Some(
        [
            x(4, 0),
            x(4, 1),
            x(4, 2).add(&re_z1_sq),
            x(4, 3).add(&x(4, 0).mul(&x(4, 1)).scale(2.0)),
        ]
        .iter()
        .map(PolyJson::from_poly)
        .collect(),
    );
    out.push(f);

    let mut f = Fixture::new(
        "rotation",
        "Unitary map (z1, z2) -> ((z1 + i z2) / √2, (i z1 + z2) / √2) on C^2",
        "linear automorphism of the ball; lift invariance under affine maps",
    );
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // real form of the complex matrix [[1, i], [i, 1]] / √2
    let rows: [[f64; 4]; 4] = [[s, 0.0, 0.0, -s], [0.0, s, s, 0.0], [0.0, -s, s, 0.0], [s, 0.0, 0.0, s]];
    f.map = Some(
        rows.iter()
            .map(|r| {
                let p = (0..4).fold(Poly::zero(4), |acc, c| acc.add(&x(4, c).scale(r[c])));
                PolyJson::from_poly(&p)
            })
            .collect(),
    );
    out.push(f);

    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// Seed discs for `disc solve` and `disc reflect`, keyed by file stem.
/// They live in `seeds/` so the fixture index skips them.
pub fn builtin_seeds() -> Vec<(&'static str, SeedJson)> {
    let z = (0.0, 0.0);
    vec![
        (
            "reflection",
            SeedJson { taylor: vec![vec![z, (0.6, 0.0)]], center: None, velocity: None, lambda: 1.0 },
        ),
        (
            "tangent",
            SeedJson {
                taylor: vec![vec![z, (1.0, 0.0)], vec![z, z, (0.2, 0.0)]],
                center: Some(vec![z, z]),
                velocity: Some(vec![(1.0, 0.0), z]),
                lambda: 1.0,
            },
        ),
    ]
}

/// Serialized form written to disk.
pub fn fixture_bytes(f: &Fixture) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(f).expect("fixtures serialize");
    s.push('\n');
    s.into_bytes()
}

/// Writes every builtin fixture to `dir/<name>.json`.
pub fn write_corpus(dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut out = Vec::new();
    for f in builtin() {
        let path = dir.join(format!("{}.json", f.name));
        fs::write(&path, fixture_bytes(&f)).with_context(|| format!("cannot write {}", path.display()))?;
        out.push(path);
    }
    let seeds = dir.join("seeds");
    fs::create_dir_all(&seeds).with_context(|| format!("cannot create {}", seeds.display()))?;
    for (name, seed) in builtin_seeds() {
        let path = seeds.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(&seed).expect("seeds serialize");
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        out.push(path);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub name: String,
    pub file: String,
    pub description: String,
    pub anchor: String,
    pub sha256: String,
}

/// Fixtures in `dir`, sorted by file name. A missing or empty directory
/// gives an empty index.
pub fn corpus_list(dir: &Path) -> Result<Vec<IndexEntry>> {
    let mut out = Vec::new();
    let Ok(rd) = fs::read_dir(dir) else {
        return Ok(out);
    };
    for entry in rd {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let (bytes, f): (Vec<u8>, Fixture) = crate::format::read_json(&path)?;
        out.push(IndexEntry {
            name: f.name,
            file: path.file_name().unwrap().to_string_lossy().into_owned(),
            description: f.description,
            anchor: f.anchor,
            sha256: sha256_hex(&bytes),
        });
    }
    out.sort_by(|a, b| a.file.cmp(&b.file));
    Ok(out)
}
