//! Front end of the `acx` tool: argument grammar, file formats, the fixture
//! corpus and JSON reports.

pub mod cli;
pub mod commands;
pub mod corpus;
pub mod format;
pub mod report;

use anyhow::Result;
use serde_json::json;

use cli::{Cli, Command, ConormalCmd, CorpusCmd, DiscCmd, LeviCmd, LiftCmd, MetricCmd, ScaleCmd, StructureCmd};
use commands::{Ctx, Outcome};
use report::{Provenance, Report};

/// `(subcommand, core operations it reaches)`.
pub const DISPATCH: &[(&str, &[&str])] = &[
    ("structure check", &["structure::check_structure"]),
    ("structure normalize", &["structure::normalize_chart"]),
    ("levi eval", &["structure::levi_matrix", "structure::levi_form"]),
    ("levi spc-test", &["structure::is_strictly_pseudoconvex"]),
    ("disc cauchy", &["disc::cauchy_green"]),
    ("disc solve", &["disc::solve_j_disc"]),
    ("disc bishop", &["disc::linearized_rh_operator", "disc::bishop_family"]),
    ("disc reflect", &["disc::reflect"]),
    ("metric bracket", &["kobayashi::kr_upper", "kobayashi::kr_lower_certificate", "kobayashi::kr_bracket"]),
    ("metric rate", &["kobayashi::blowup_rate_fit"]),
    ("metric hopf", &["kobayashi::hopf_margin"]),
    ("metric anisotropy", &["kobayashi::tangent_map_anisotropy"]),
    ("lift build", &["cotangent::lift_structure"]),
    ("lift invariance", &["cotangent::lift_invariance_check"]),
    ("lift conormal", &["cotangent::conormal_bundle", "cotangent::total_reality_test"]),
    ("conormal test", &["cotangent::conormal_bundle", "cotangent::total_reality_test"]),
    ("scale dilate", &["scaling::dilate_structure", "scaling::dilate_defining"]),
    (
        "scale run",
        &["scaling::pinchuk_normalize", "scaling::boundary_projection", "scaling::scaling_sequence"],
    ),
    ("scale model", &["scaling::model_domain"]),
    ("corpus list", &["corpus::corpus_list"]),
    ("corpus write", &["corpus::write_corpus"]),
];

/// Subcommand path, e.g. `"disc solve"`.
pub fn command_name(cli: &Cli) -> String {
    let s = match &cli.command {
        Command::Structure(StructureCmd::Check(_)) => "structure check",
        Command::Structure(StructureCmd::Normalize(_)) => "structure normalize",
        Command::Levi(LeviCmd::Eval(_)) => "levi eval",
        Command::Levi(LeviCmd::SpcTest(_)) => "levi spc-test",
        Command::Disc(DiscCmd::Cauchy) => "disc cauchy",
        Command::Disc(DiscCmd::Solve(_)) => "disc solve",
        Command::Disc(DiscCmd::Bishop(_)) => "disc bishop",
        Command::Disc(DiscCmd::Reflect(_)) => "disc reflect",
        Command::Metric(MetricCmd::Bracket(_)) => "metric bracket",
        Command::Metric(MetricCmd::Rate(_)) => "metric rate",
        Command::Metric(MetricCmd::Hopf(_)) => "metric hopf",
        Command::Metric(MetricCmd::Anisotropy(_)) => "metric anisotropy",
        Command::Lift(l) => match &l.sub {
            None | Some(LiftCmd::Build(_)) => "lift build",
            Some(LiftCmd::Invariance(_)) => "lift invariance",
            Some(LiftCmd::Conormal(_)) => "lift conormal",
        },
        Command::Conormal(ConormalCmd::Test(_)) => "conormal test",
        Command::Scale(ScaleCmd::Dilate(_)) => "scale dilate",
        Command::Scale(ScaleCmd::Run(_)) => "scale run",
        Command::Scale(ScaleCmd::Model(_)) => "scale model",
        Command::Corpus(CorpusCmd::List(_)) => "corpus list",
        Command::Corpus(CorpusCmd::Write(_)) => "corpus write",
    };
    s.to_string()
}

fn dispatch(ctx: &mut Ctx, cmd: &Command) -> Result<Outcome> {
    use commands::*;
    match cmd {
        Command::Structure(StructureCmd::Check(a)) => structure_check(ctx, a),
        Command::Structure(StructureCmd::Normalize(a)) => structure_normalize(ctx, a),
        Command::Levi(LeviCmd::Eval(a)) => levi_eval(ctx, a),
        Command::Levi(LeviCmd::SpcTest(a)) => levi_spc(ctx, a),
        Command::Disc(DiscCmd::Cauchy) => disc_cauchy(ctx),
        Command::Disc(DiscCmd::Solve(a)) => disc_solve(ctx, a),
        Command::Disc(DiscCmd::Bishop(a)) => disc_bishop(ctx, a),
        Command::Disc(DiscCmd::Reflect(a)) => disc_reflect(ctx, a),
        Command::Metric(MetricCmd::Bracket(a)) => metric_bracket(ctx, a),
        Command::Metric(MetricCmd::Rate(a)) => metric_rate(ctx, a),
        Command::Metric(MetricCmd::Hopf(a)) => metric_hopf(ctx, a),
        Command::Metric(MetricCmd::Anisotropy(a)) => metric_anisotropy(ctx, a),
        Command::Lift(l) => match &l.sub {
            None => lift_build(ctx, &l.build),
            Some(LiftCmd::Build(a)) => lift_build(ctx, a),
            Some(LiftCmd::Invariance(a)) => lift_invariance(ctx, a),
            Some(LiftCmd::Conormal(a)) => conormal_test(ctx, a),
        },
        Command::Conormal(ConormalCmd::Test(a)) => conormal_test(ctx, a),
        Command::Scale(ScaleCmd::Dilate(a)) => scale_dilate(ctx, a),
        Command::Scale(ScaleCmd::Run(a)) => scale_run(ctx, a),
        Command::Scale(ScaleCmd::Model(a)) => scale_model(ctx, a),
        Command::Corpus(CorpusCmd::List(a)) => corpus_list_cmd(a),
        Command::Corpus(CorpusCmd::Write(a)) => corpus_write_cmd(a),
    }
}

/// Runs one command. The report's `pass` is the conjunction of its checks.
pub fn run(cli: &Cli) -> Result<(Report, Option<String>)> {
    commands::validate(&cli.global)?;
    let mut ctx = Ctx::new(cli.global.clone());
    let out = dispatch(&mut ctx, &cli.command)?;
    let pass = out.checks.iter().all(|c| c.pass);
    let report = Report {
        command: command_name(cli),
        pass,
        checks: out.checks,
        data: out.data,
        provenance: Provenance {
            tool: "acx".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: serde_json::to_value(cli).unwrap_or(json!(null)),
            fixtures: ctx.fixtures,
        },
    };
    Ok((report, out.csv))
}

/// Error category for the structured error record.
pub fn error_kind(e: &anyhow::Error) -> String {
    use acx_core::Error as E;
    if let Some(core) = e.downcast_ref::<E>() {
        let k = match core {
            E::Dimension(_) => "Dimension",
            E::Parameter(_) => "Parameter",
            E::Domain(_) => "Domain",
            E::Degenerate(_) => "Degenerate",
            E::Convergence { .. } => "Convergence",
            E::Input(_) => "Input",
            E::Data(_) => "Data",
            E::Precondition(_) => "Precondition",
            E::SearchRange(_) => "SearchRange",
            E::CertificateRejected(_) => "CertificateRejected",
            E::Inconclusive(_) => "Inconclusive",
            E::Assembly(_) => "Assembly",
            E::Conditioning(_) => "Conditioning",
            E::ModelDegeneracy(_) => "ModelDegeneracy",
            E::Unsupported(_) => "Unsupported",
        };
        return k.into();
    }
    if e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) {
        return "Io".into();
    }
    if e.chain().any(|c| c.downcast_ref::<serde_json::Error>().is_some()) {
        return "Parse".into();
    }
    "Input".into()
}
