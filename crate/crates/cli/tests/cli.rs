use std::path::Path;
use std::process::Command as Proc;

use serde_json::Value;
use upbw_cli::{run, Command, RunConfig};

fn upbw(args: &[&str], threads: Option<&str>) -> (i32, String) {
    let mut cmd = Proc::new(env!("CARGO_BIN_EXE_upbw"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("UPBW_THREADS", t);
    }
    let out = cmd.output().expect("binary runs");
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn parse(doc: &str) -> Value {
    serde_json::from_str(doc).expect("valid JSON")
}

fn num(v: &Value, path: &[&str]) -> f64 {
    path.iter().fold(v, |v, k| &v[*k]).as_f64().unwrap_or_else(|| panic!("{path:?}"))
}

#[test]
fn pyramid_report() {
    let out = run(&RunConfig::new(Command::Report, "pyramid"));
    assert_eq!(out.code, 0, "{}", out.document);
    let d = parse(&out.document);
    let (s2, s5, s10) = (2f64.sqrt(), 5f64.sqrt(), 10f64.sqrt());
    assert!((num(&d, &["epsilon", "lower"]) - 1.76310e-3).abs() < 1e-8);
    assert!((num(&d, &["epsilon", "lower"]) - (4.0 + s2 - s5 - s10) / 9.0).abs() < 1e-12);
    let overlap = 0.25 * (1.0 - (7.0 + s5) / (3.0 * (3.0 + s5)));
    assert!((num(&d, &["state", "overlap"]) - overlap).abs() < 1e-12);
    assert!(num(&d, &["epsilon", "lower"]) <= num(&d, &["epsilon", "upper"]));
    assert_eq!(d["granted"], Value::Bool(true));
    for check in d["regression"].as_array().unwrap() {
        assert_eq!(check["pass"], Value::Bool(true), "{check}");
    }
}

#[test]
fn gentiles4_report() {
    let out = run(&RunConfig::new(Command::Report, "gentiles:4"));
    assert_eq!(out.code, 0, "{}", out.document);
    let d = parse(&out.document);
    // Value produced by the printed family: (1/5)(1/2 - 1/n).
    assert!((num(&d, &["state", "overlap"]) - 0.05).abs() < 1e-10);
    assert_eq!(d["state"]["rank"], 5);
}

#[test]
fn output_is_byte_identical_across_runs_and_threads() {
    let args = ["report", "--upb", "pyramid", "--restarts", "16", "--samples", "500"];
    let (c1, a) = upbw(&args, Some("1"));
    let (c2, b) = upbw(&args, Some("4"));
    let (c3, c) = upbw(&args, None);
    assert_eq!((c1, c2, c3), (0, 0, 0));
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn seed_changes_only_randomized_stages() {
    let mut cfg = RunConfig::new(Command::Epsilon, "pyramid");
    cfg.restarts = 8;
    let a = parse(&run(&cfg).document);
    cfg.seed = 7;
    let b = parse(&run(&cfg).document);
    assert_eq!(a["lower"], b["lower"]);
    assert_eq!(b["seesaw"]["seed"], 8);
    assert!((num(&a, &["upper"]) - num(&b, &["upper"])).abs() < 1e-6);
}

#[test]
fn build_then_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    let (code, stdout) = upbw(&["build", "--upb", "pyramid", "-o", f.to_str().unwrap()], None);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let spec = format!("file:{}", f.display());
    let from_file = parse(&run(&RunConfig::new(Command::Report, spec)).document);
    let builtin = parse(&run(&RunConfig::new(Command::Report, "pyramid")).document);
    for path in [
        &["epsilon", "lower"][..],
        &["epsilon", "upper"],
        &["state", "overlap"],
        &["state", "ppt_min_eig"],
        &["witness", "trace_H_rho"],
        &["map", "certificates", "choi_min_eig"],
        &["map", "certificates", "unitality_defect"],
    ] {
        assert!((num(&from_file, path) - num(&builtin, path)).abs() < 1e-12, "{path:?}");
    }
}

fn write_bad_file(dir: &Path) -> String {
    let out = run(&RunConfig::new(Command::Build, "pyramid"));
    let mut d = parse(&out.document);
    let first = d["states"][0].clone();
    d["states"][1] = first;
    let path = dir.join("bad.json");
    std::fs::write(&path, serde_json::to_string(&d).unwrap()).unwrap();
    format!("file:{}", path.display())
}

#[test]
fn non_orthonormal_file_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_bad_file(dir.path());
    let (code, stdout) = upbw(&["validate", "--upb", &spec], None);
    assert_eq!(code, 1);
    assert_eq!(parse(&stdout)["validation"]["verdict"], "Invalid");
    let out = run(&RunConfig::new(Command::Witness, spec));
    assert_eq!(out.code, 1);
}

#[test]
fn error_exit_codes() {
    assert_eq!(run(&RunConfig::new(Command::State, "file:/definitely/missing.json")).code, 3);
    assert_eq!(run(&RunConfig::new(Command::State, "gentiles:x")).code, 3);
    assert_eq!(run(&RunConfig::new(Command::State, "tensor:pyramid")).code, 3);
    let mut cfg = RunConfig::new(Command::Witness, "pyramid");
    cfg.mu = Some(1.0);
    let out = run(&cfg);
    assert_eq!(out.code, 2);
    assert!(parse(&out.document)["error"].as_str().unwrap().contains("mu"));
    // Tensor products are accepted but too large for the ε enumeration.
    assert_eq!(run(&RunConfig::new(Command::Certify, "tensor:pyramid,pyramid")).code, 2);
}

#[test]
fn tensor_state_is_ppt() {
    let out = run(&RunConfig::new(Command::State, "tensor:pyramid,pyramid"));
    assert_eq!(out.code, 0);
    let d = parse(&out.document);
    assert_eq!(d["dims"], serde_json::json!([9, 9]));
    assert!(num(&d, &["ppt_min_eig"]) >= -1e-10);
    assert_eq!(d["rank"], 56);
}

#[test]
fn documents_follow_their_schemas() {
    let keys = |cmd, extra: &[&str]| {
        let mut cfg = RunConfig::new(cmd, "pyramid");
        cfg.restarts = 4;
        cfg.samples = 100;
        let out = run(&cfg);
        assert_eq!(out.code, 0, "{}", out.document);
        let d = parse(&out.document);
        for k in extra {
            assert!(d.get(*k).is_some(), "{k} missing in {cmd:?}");
        }
    };
    keys(Command::Build, &["label", "dims", "states"]);
    keys(Command::State, &["dims", "rho", "ppt_min_eig", "rank", "source_label"]);
    keys(Command::Epsilon, &["lower", "upper", "certificate", "argmin"]);
    keys(Command::Witness, &["H", "mu", "psi", "trace_H_rho", "eps_lower", "positivity_min_found"]);
    keys(Command::Map, &["in_dim", "out_dim", "basis", "choi", "certificates"]);
    keys(Command::Certify, &["in_dim", "out_dim", "basis", "choi", "certificates", "granted"]);
}
