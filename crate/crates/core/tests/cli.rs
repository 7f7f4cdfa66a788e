use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sodegeom")).args(args).output().expect("binary runs")
}

fn with_spec(task: &str, spec: &str, extra: &[&str]) -> (i32, Value) {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(spec.as_bytes()).unwrap();
    let path = f.path().to_str().unwrap().to_string();
    let mut args = vec![task, path.as_str()];
    args.extend_from_slice(extra);
    let out = run(&args);
    let v = serde_json::from_slice(&out.stdout).expect("stdout is a single JSON document");
    (out.status.code().unwrap(), v)
}

const OSC: &str = r#"{"dimension": 1, "F": ["-x1 - 1.0*v1"], "samples": {"count": 5, "seed": 9}}"#;

#[test]
fn analyze_exits_zero() {
    let (code, v) = with_spec("analyze", OSC, &[]);
    assert_eq!(code, 0);
    assert_eq!(v["pass"], true);
    assert_eq!(v["command"], "analyze");
    assert_eq!(v["points"].as_array().unwrap().len(), 5);
}

#[test]
fn mutation_exits_one() {
    let spec = r#"{"dimension": 2, "F": ["x1*v2^2", "x2*v1 - t*v2^2"], "samples": {"count": 3, "seed": 1}}"#;
    let (code, v) = with_spec("verify", spec, &["--mutate", "flip-p"]);
    assert_eq!(code, 1);
    assert_eq!(v["pass"], false);
}

#[test]
fn input_errors_exit_two() {
    let bad = [
        (r#"{"dimension": 1, "F": ["sin(x1"], "samples": {"seed": 1}}"#, "SyntaxError"),
        (r#"{"dimension": 1, "F": ["y1"], "samples": {"seed": 1}}"#, "UnknownIdentifier"),
        (r#"{"dimension": 1, "F": ["0"], "samples": {"seed": 1}, "colour": 3}"#, "JsonError"),
        (r#"{"dimension": 1, "F": ["0"]"#, "JsonError"),
        (r#"{"dimension": 1, "F": ["0"], "samples": {"seed": 1}, "metric": [["-1"]]}"#, "NotPositiveDefinite"),
    ];
    for (spec, kind) in bad {
        let task = if spec.contains("metric") { "riemann" } else { "analyze" };
        let (code, v) = with_spec(task, spec, &[]);
        assert_eq!(code, 2, "{spec}");
        assert_eq!(v["error"]["kind"], kind, "{spec}: {v}");
        assert!(v["error"]["location"].is_object());
    }
}

#[test]
fn push_without_automorphism_is_rejected() {
    let (code, v) = with_spec("push", OSC, &[]);
    assert_eq!(code, 2);
    assert!(v["error"]["kind"].is_string());
}

#[test]
fn logs_stay_off_stdout() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(OSC.as_bytes()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sodegeom"))
        .env("RUST_LOG", "debug")
        .args(["classify", f.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    serde_json::from_slice::<Value>(&out.stdout).expect("only JSON on stdout");
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let out = run(&["frobnicate", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
}
