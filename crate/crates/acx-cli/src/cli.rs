//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "acx", version, about = "Numerical checks for almost complex structures, discs and metrics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct GlobalArgs {
    /// Tolerance of the command's main iteration or check.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Grid size: points per axis, or radial nodes for disc grids.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Truncation order N of disc expansions (at least 4).
    #[arg(long, global = true)]
    pub truncation: Option<usize>,
    /// RNG seed for sampled checks. `disc solve` and `disc reflect` read it
    /// as the path of a seed-disc file instead.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// Write per-step diagnostics as CSV to this file.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum Command {
    /// Almost complex structure fields.
    #[command(subcommand)]
    Structure(StructureCmd),
    /// Levi forms and pseudoconvexity.
    #[command(subcommand)]
    Levi(LeviCmd),
    /// Cauchy-Green transform, J-holomorphic discs, Bishop discs, reflection.
    #[command(subcommand)]
    Disc(DiscCmd),
    /// Kobayashi-Royden metric estimates.
    #[command(subcommand)]
    Metric(MetricCmd),
    /// Cotangent lift. Without a subcommand, builds and validates the lift.
    Lift(LiftArgs),
    /// Conormal bundle tests (same as `lift conormal`).
    #[command(subcommand)]
    Conormal(ConormalCmd),
    /// Boundary scaling.
    #[command(subcommand)]
    Scale(ScaleCmd),
    /// Shipped fixture corpus.
    #[command(subcommand)]
    Corpus(CorpusCmd),
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum StructureCmd {
    /// Checks J^2 = -I on a grid.
    Check(StructureCheck),
    /// Chart with J(0) = J_st and small C^2 distance to J_st.
    Normalize(StructureNormalize),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StructureCheck {
    #[arg(long)]
    pub structure: String,
    /// Half-width of the sample cube.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StructureNormalize {
    #[arg(long)]
    pub structure: String,
    /// Complex coordinates of the centre, e.g. "0,0.1+0.2i".
    #[arg(long)]
    pub point: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub lambda0: f64,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum LeviCmd {
    /// Levi matrix of a function at a point.
    Eval(LeviEval),
    /// Strict pseudoconvexity of a hypersurface on samples.
    SpcTest(LeviSpc),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LeviEval {
    #[arg(long)]
    pub structure: String,
    /// Fixture whose defining polynomial is evaluated.
    #[arg(long)]
    pub function: String,
    #[arg(long)]
    pub point: String,
    #[arg(long)]
    pub vector: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LeviSpc {
    #[arg(long)]
    pub structure: String,
    #[arg(long)]
    pub hypersurface: String,
    /// Points separated by ';', each a complex list. Random projected
    /// points when absent.
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum DiscCmd {
    /// Cauchy-Green transform on standard inputs.
    Cauchy,
    /// Solves the disc equation from a holomorphic seed (`--seed <file>`).
    Solve(DiscSolve),
    /// Riemann-Hilbert kernel and Bishop discs on a torus.
    Bishop(DiscBishop),
    /// Reflection of a disc across the real boundary.
    Reflect(DiscReflect),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiscSolve {
    /// Fixture with a structure or a tensor.
    #[arg(long)]
    pub structure: String,
    /// Overrides the seed file's deformation parameter.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub residual_max: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiscBishop {
    #[arg(long)]
    pub torus: String,
    /// Family parameter, a comma-separated list of 3n reals.
    #[arg(long)]
    pub params: Option<String>,
    /// Fixture with the deformation (structure or tensor).
    #[arg(long)]
    pub tensor: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiscReflect {
    #[arg(long)]
    pub tensor: String,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum MetricCmd {
    /// Lower and upper bounds for the metric at a point and vector.
    Bracket(MetricBracketArgs),
    /// Blow-up exponent of the metric along the inner normal.
    Rate(MetricRate),
    /// Hopf margin of a negative function.
    Hopf(MetricHopf),
    /// Tangent-map entries of a map in adapted frames.
    Anisotropy(MetricAnisotropy),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricBracketArgs {
    #[arg(long)]
    pub domain: String,
    /// Defaults to the standard structure.
    #[arg(long)]
    pub structure: Option<String>,
    #[arg(long)]
    pub point: String,
    #[arg(long)]
    pub vector: String,
    /// Adds a check that this value lies in the bracket.
    #[arg(long)]
    pub expect: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Normal,
    Tangential,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricRate {
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub structure: Option<String>,
    /// Boundary point.
    #[arg(long)]
    pub point: String,
    #[arg(long, value_enum, default_value = "normal")]
    pub direction: DirectionArg,
    /// Adds a check that the fitted slope is within `slope_tol` of this.
    #[arg(long, allow_hyphen_values = true)]
    pub expect: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub slope_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricHopf {
    #[arg(long)]
    pub domain: String,
    /// Fixture whose defining polynomial is the function; the domain's own
    /// defining function when absent.
    #[arg(long)]
    pub function: Option<String>,
    /// Compact set, points separated by ';'. The box centre when absent.
    #[arg(long)]
    pub compact: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricAnisotropy {
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub target_domain: Option<String>,
    #[arg(long)]
    pub structure: Option<String>,
    #[arg(long)]
    pub target_structure: Option<String>,
    /// Boundary point of the source domain.
    #[arg(long)]
    pub point: String,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
pub struct LiftArgs {
    #[command(subcommand)]
    pub sub: Option<LiftCmd>,
    #[command(flatten)]
    pub build: LiftBuild,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum LiftCmd {
    /// Builds the lift and checks that it squares to -I.
    Build(LiftBuild),
    /// Checks that a map's cotangent lift intertwines the lifts.
    Invariance(LiftInvariance),
    /// Total reality of a conormal bundle.
    Conormal(ConormalArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct LiftBuild {
    #[arg(long)]
    pub structure: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LiftInvariance {
    #[arg(long)]
    pub structure: String,
    #[arg(long)]
    pub map: String,
    /// Target structure; the push-forward when the map is affine.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum ConormalCmd {
    /// Total reality of the conormal bundle, compared with the Levi form.
    Test(ConormalArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConormalArgs {
    #[arg(long)]
    pub hypersurface: String,
    #[arg(long)]
    pub structure: String,
    /// Non-isotropic dilation applied to the structure first.
    #[arg(long)]
    pub dilate: Option<f64>,
    /// Points separated by ';'. Random projected points when absent.
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    /// Fiber coefficient c of the conormal covector.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub coefficient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DilationArg {
    Nonisotropic,
    Isotropic,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum ScaleCmd {
    /// Dilates a structure (and a defining function).
    Dilate(ScaleDilate),
    /// Scaling sequence along a ray to a boundary point.
    Run(ScaleRun),
    /// Model domain at a boundary point.
    Model(ScaleModel),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScaleDilate {
    #[arg(long)]
    pub structure: String,
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "nonisotropic")]
    pub kind: DilationArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScaleRun {
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub structure: String,
    /// Boundary point, complex coordinates.
    #[arg(long, default_value = "0,0")]
    pub point: String,
    /// Direction of approach, complex coordinates.
    #[arg(long, default_value = "0,-1", allow_hyphen_values = true)]
    pub ray: String,
    #[arg(long, default_value_t = 7)]
    pub steps: usize,
    /// Points are `t + 2^-k ray` for `k = start..start + steps`.
    #[arg(long, default_value_t = 3)]
    pub start: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScaleModel {
    #[arg(long)]
    pub domain: String,
    #[arg(long)]
    pub structure: Option<String>,
    #[arg(long, default_value = "0,0")]
    pub point: String,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum CorpusCmd {
    /// Index of the fixtures in the corpus directory.
    List(CorpusDir),
    /// Writes the shipped fixtures.
    Write(CorpusDir),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusDir {
    /// Defaults to `$ACX_CORPUS` or the source tree's corpus.
    #[arg(long)]
    #[serde(skip)]
    pub dir: Option<PathBuf>,
}
