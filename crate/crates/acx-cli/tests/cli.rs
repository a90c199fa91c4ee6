use std::path::Path;
use std::process::{Command, Output};

use acx_cli::cli::Cli;
use acx_cli::corpus::{builtin, builtin_seeds, corpus_dir, corpus_list, fixture_bytes, write_corpus};
use acx_cli::format::{parse_complex_list, PolyJson, StructureJson};
use acx_cli::DISPATCH;
use acx_core::fixtures;
use clap::CommandFactory;
use serde_json::Value;

fn acx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acx")).args(args).env_remove("ACX_CORPUS").output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn check_value(r: &Value, name: &str) -> f64 {
    let c = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap();
    c["value"].as_f64().unwrap()
}

#[test]
fn shipped_corpus_matches_the_builtin_fixtures() {
    let dir = corpus_dir();
    for f in builtin() {
        let on_disk = std::fs::read(dir.join(format!("{}.json", f.name))).unwrap();
        assert_eq!(on_disk, fixture_bytes(&f), "corpus/{}.json is stale; run `acx corpus write`", f.name);
    }
    for (name, _) in builtin_seeds() {
        assert!(dir.join("seeds").join(format!("{name}.json")).exists());
    }
    let index = corpus_list(&dir).unwrap();
    assert_eq!(index.len(), builtin().len());
    assert!(index.len() >= 10);
    assert!(index.iter().all(|e| !e.anchor.trim().is_empty() && !e.description.trim().is_empty()));
    assert!(index.windows(2).all(|w| w[0].file < w[1].file));
    // torus data, model domain, sphere and diagonal perturbations are all shipped
    for name in ["torus-c1", "torus-c2", "model", "sphere", "diagonal", "diagonal-perturbed"] {
        assert!(index.iter().any(|e| e.name == name), "{name}");
    }
}

#[test]
fn corpus_index_edge_cases() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(corpus_list(tmp.path()).unwrap().is_empty());
    assert!(corpus_list(&tmp.path().join("missing")).unwrap().is_empty());
    write_corpus(tmp.path()).unwrap();
    let a = corpus_list(tmp.path()).unwrap();
    let b = corpus_list(tmp.path()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, corpus_list(&corpus_dir()).unwrap());
}

#[test]
fn corpus_list_command_reads_the_environment_override() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_acx"))
        .args(["corpus", "list"])
        .env("ACX_CORPUS", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(report(&out)["data"]["fixtures"].as_array().unwrap().len(), 0);
}

#[test]
fn dispatch_table_covers_every_operation() {
    let root = Cli::command();
    for (path, _) in DISPATCH {
        let mut cmd = &root;
        for part in path.split(' ') {
            cmd = cmd.find_subcommand(part).unwrap_or_else(|| panic!("no subcommand {path}"));
        }
    }
    // every leaf subcommand is in the table
    let mut leaves = Vec::new();
    for top in root.get_subcommands() {
        let subs: Vec<_> = top.get_subcommands().collect();
        if subs.is_empty() {
            leaves.push(top.get_name().to_string());
        }
        for s in subs {
            leaves.push(format!("{} {}", top.get_name(), s.get_name()));
        }
    }
    for leaf in &leaves {
        assert!(DISPATCH.iter().any(|(p, _)| p == leaf), "{leaf} missing from the dispatch table");
    }
    let ops: Vec<&str> = DISPATCH.iter().flat_map(|(_, o)| o.iter().copied()).collect();
    for op in [
        "structure::check_structure",
        "structure::levi_form",
        "structure::is_strictly_pseudoconvex",
        "structure::normalize_chart",
        "disc::cauchy_green",
        "disc::solve_j_disc",
        "disc::linearized_rh_operator",
        "disc::bishop_family",
        "disc::reflect",
        "kobayashi::kr_upper",
        "kobayashi::kr_lower_certificate",
        "kobayashi::kr_bracket",
        "kobayashi::blowup_rate_fit",
        "kobayashi::hopf_margin",
        "kobayashi::tangent_map_anisotropy",
        "cotangent::lift_structure",
        "cotangent::lift_invariance_check",
        "cotangent::conormal_bundle",
        "cotangent::total_reality_test",
        "scaling::dilate_structure",
        "scaling::pinchuk_normalize",
        "scaling::model_domain",
        "scaling::scaling_sequence",
        "corpus::corpus_list",
    ] {
        assert!(ops.contains(&op), "{op} is unreachable");
    }
}

#[test]
fn structure_check_on_the_standard_structure() {
    let out = acx(&["structure", "check", "--structure", "jst"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["pass"], true);
    assert_eq!(check_value(&r, "max |J^2 + I|"), 0.0);
    assert_eq!(r["provenance"]["fixtures"][0]["path"], "jst");
}

#[test]
fn metric_bracket_on_the_disc_contains_one() {
    let out = acx(&["metric", "bracket", "--domain", "disc", "--point", "0", "--vector", "1", "--tol", "1e-3"]);
    assert!(out.status.success());
    let r = report(&out);
    let (lo, hi) = (r["data"]["lower"].as_f64().unwrap(), r["data"]["upper"].as_f64().unwrap());
    assert!(lo <= 1.0 && 1.0 <= hi, "[{lo}, {hi}]");
    assert!(r["data"]["witness"]["coefficients"].is_array());
    assert!(r["data"].get("lower_source").is_some());
}

#[test]
fn lift_of_the_perturbed_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("lift.json");
    let out = acx(&["lift", "--structure", "perturbed", "--grid", "5", "--report", path.to_str().unwrap()]);
    assert!(out.status.success());
    let r = report(&out);
    assert!(check_value(&r, "max |J~^2 + I|") <= 1e-9);
    assert_eq!(std::fs::read(&path).unwrap(), out.stdout);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        &["levi", "spc-test", "--structure", "jst", "--hypersurface", "sphere", "--seed", "5"][..],
        &["scale", "run", "--domain", "ball-model", "--structure", "diagonal-perturbed", "--steps", "3"][..],
        &["disc", "bishop", "--torus", "torus-c1", "--truncation", "8"][..],
    ] {
        let a = acx(args);
        let b = acx(args);
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout);
    }
    let a = acx(&["levi", "spc-test", "--structure", "jst", "--hypersurface", "sphere", "--seed", "5"]);
    let b = acx(&["levi", "spc-test", "--structure", "jst", "--hypersurface", "sphere", "--seed", "6"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn failing_checks_exit_with_one() {
    let out = acx(&["conormal", "test", "--hypersurface", "flat", "--structure", "jst"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["pass"], false);
    let out = acx(&["levi", "spc-test", "--structure", "jst", "--hypersurface", "flat"]);
    assert_eq!(out.status.code(), Some(1));
}

fn error_record(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn errors_produce_structured_records() {
    let e = error_record(&acx(&["structure", "check", "--structure", "no-such-fixture"]));
    assert_eq!(e["kind"], "Io");
    assert_eq!(e["command"], "structure check");

    let e = error_record(&acx(&["disc", "cauchy", "--truncation", "3"]));
    assert!(e["message"].as_str().unwrap().contains("truncation"));

    let e = error_record(&acx(&["structure", "check", "--structure", "jst", "--tol", "0"]));
    assert!(e["message"].as_str().unwrap().contains("--tol"));

    let e = error_record(&acx(&["scale", "model", "--domain", "flat"]));
    assert_eq!(e["kind"], "ModelDegeneracy");

    let e = error_record(&acx(&["metric", "bracket", "--domain", "disc", "--point", "2", "--vector", "1"]));
    assert_eq!(e["kind"], "Domain");

    let e = error_record(&acx(&["disc", "solve", "--structure", "diagonal"]));
    assert!(e["message"].as_str().unwrap().contains("--seed"));

    let e = error_record(&acx(&["structure", "frobnicate"]));
    assert_eq!(e["kind"], "Usage");

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let e = error_record(&acx(&["structure", "check", "--structure", bad.to_str().unwrap()]));
    assert_eq!(e["kind"], "Parse");
}

#[test]
fn scale_run_writes_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("run.csv");
    let out = acx(&[
        "scale", "run", "--domain", "ball-model", "--structure", "diagonal-perturbed", "--ray", "0,-1", "--steps", "7",
        "--csv", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,delta,structure_sup,structure_c2,defining_c2,point_error");
    assert_eq!(lines.len(), 8);
    assert_eq!(report(&out)["data"]["steps"].as_array().unwrap().len(), 7);
}

#[test]
fn every_subcommand_runs_on_the_corpus() {
    let cases: &[&[&str]] = &[
        &["structure", "normalize", "--structure", "perturbed", "--point", "0.1,0"],
        &["levi", "eval", "--structure", "jst", "--function", "sphere", "--point", "1,0", "--vector", "0,1"],
        &["disc", "cauchy", "--grid", "32"],
        &["disc", "solve", "--structure", "diagonal", "--seed", "seeds/tangent.json", "--tol", "1e-8"],
        &["disc", "bishop", "--torus", "torus-c2", "--params", "0.05,0,0,0,0,0"],
        &["disc", "reflect", "--tensor", "reflection"],
        &["metric", "hopf", "--domain", "sphere"],
        &["metric", "anisotropy", "--map", "shear", "--domain", "siegel", "--target-domain", "siegel-sheared", "--point", "0.3+0.1i,-0.1+0.2i"],
        &["lift", "build", "--structure", "jst"],
        &["lift", "invariance", "--structure", "perturbed", "--map", "rotation"],
        &["lift", "invariance", "--structure", "jst", "--map", "shear", "--target", "jst"],
        &["lift", "conormal", "--hypersurface", "model", "--structure", "diagonal-perturbed", "--dilate", "1e-2"],
        &["conormal", "test", "--hypersurface", "sphere", "--structure", "jst"],
        &["scale", "dilate", "--structure", "diagonal-perturbed", "--delta", "0.01", "--domain", "model-tilted"],
        &["scale", "model", "--domain", "model-tilted"],
        &["scale", "run", "--domain", "model", "--structure", "jst"],
    ];
    for args in cases {
        let out = acx(args);
        assert!(out.status.success(), "{args:?}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
        let r = report(&out);
        assert_eq!(r["pass"], true);
        assert!(!r["checks"].as_array().unwrap().is_empty());
    }
}

#[test]
fn lift_invariance_needs_a_target_for_nonlinear_maps() {
    let e = error_record(&acx(&["lift", "invariance", "--structure", "jst", "--map", "shear"]));
    assert!(e["message"].as_str().unwrap().contains("--target"));
}

#[test]
fn file_formats_round_trip() {
    let j = fixtures::perturbed_fixture();
    let s = StructureJson::from_field(&j).unwrap();
    let text = serde_json::to_string(&s).unwrap();
    let back: StructureJson = serde_json::from_str(&text).unwrap();
    let j2 = back.to_field().unwrap();
    assert_eq!(serde_json::to_string(&StructureJson::from_field(&j2).unwrap()).unwrap(), text);
    for z in [[0.1, -0.2, 0.3, 0.0], [0.0, 0.5, -0.5, 0.25]] {
        // term order may differ, so allow summation rounding
        assert!((j.matrix(&z) - j2.matrix(&z)).amax() <= 1e-15);
    }
    let p = PolyJson { dim: 2, terms: vec![] };
    assert!(p.to_poly().is_ok());
    let bad: PolyJson = serde_json::from_str(r#"{"dim": 2, "terms": [{"coeff": 1.0, "exponents": [1]}]}"#).unwrap();
    assert!(bad.to_poly().is_err());
    assert_eq!(parse_complex_list("0,-1").unwrap(), vec![0.0, 0.0, -1.0, 0.0]);
    assert_eq!(parse_complex_list("0.5+0.25i, -2i").unwrap(), vec![0.5, 0.25, 0.0, -2.0]);
    assert!(parse_complex_list("x").is_err());
}

#[test]
fn fixtures_resolve_by_path_as_well_as_name() {
    let path = corpus_dir().join("jst.json");
    assert!(Path::new(&path).exists());
    let out = acx(&["structure", "check", "--structure", path.to_str().unwrap()]);
    assert!(out.status.success());
    let by_name = report(&acx(&["structure", "check", "--structure", "jst"]));
    let by_path = report(&out);
    assert_eq!(by_name["provenance"]["fixtures"][0]["sha256"], by_path["provenance"]["fixtures"][0]["sha256"]);
}
