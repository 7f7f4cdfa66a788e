//! Command-line front end: `sodegeom <task> <spec.json>` and
//! `sodegeom selftest`. Reports go to standard output, logs to standard error.
//!
//! Exit codes: 0 when every check is within tolerance, 1 when one is not,
//! 2 on input errors (reported as `{"error": {kind, message, location}}`).

pub mod report;
pub mod selftest;
pub mod spec;
pub mod tasks;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::{json, Map, Value};

pub use report::{to_text, Check, Section};
pub use spec::{Problem, ProblemSpec, Tolerances, TASKS};
pub use tasks::Mutation;

#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub location: Map<String, Value>,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> CliError {
        CliError { kind, message: message.into(), location: Map::new() }
    }

    pub fn at_field(mut self, field: &str) -> CliError {
        self.location.entry("field").or_insert_with(|| Value::from(field));
        self
    }

    pub fn at_json(mut self, line: usize, column: usize) -> CliError {
        self.location.insert("line".into(), line.into());
        self.location.insert("column".into(), column.into());
        self
    }

    fn with_position(mut self, position: usize) -> CliError {
        self.location.insert("position".into(), position.into());
        self
    }

    pub fn to_value(&self) -> Value {
        json!({"error": {"kind": self.kind, "message": self.message, "location": self.location}})
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> CliError {
        use crate::error::ParseError;
        use crate::Error as E;
        let message = e.to_string();
        match e {
            E::Parse(ParseError::Syntax { position, .. }) => CliError::new("SyntaxError", message).with_position(position),
            E::Parse(ParseError::UnknownIdentifier { position, .. }) => {
                CliError::new("UnknownIdentifier", message).with_position(position)
            }
            E::Eval(_) => CliError::new("EvalError", message),
            E::VarSet(_) => CliError::new("InvalidVariables", message),
            E::OracleMismatch { .. } => CliError::new("OracleMismatch", message),
            E::SymbolicModeUnsupported(_) => CliError::new("SymbolicModeUnsupported", message),
            E::NotPositiveDefinite(k) => CliError::new("NotPositiveDefinite", message).with_point(k),
            E::MissingInverse => CliError::new("MissingInverse", message),
            E::SingularMetric => CliError::new("SingularMetric", message),
            E::BadAutomorphism(_) => CliError::new("BadAutomorphism", message),
            E::Invalid(_) => CliError::new("InvalidSpec", message),
        }
    }
}

impl CliError {
    fn with_point(mut self, k: usize) -> CliError {
        self.location.insert("point".into(), k.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MutationArg {
    None,
    FlipP,
}

#[derive(Debug, Parser)]
#[command(name = "sodegeom", version, about = "Chern connection and invariants of second-order ODE systems")]
struct Args {
    /// analyze, classify, verify, push, jets, riemann, run (the spec's task list) or selftest
    task: String,
    /// problem specification (JSON); not used by selftest
    spec: Option<PathBuf>,
    /// corrupt the closed formulas (oracle sanity check)
    #[arg(long, value_enum, default_value = "none", hide = true)]
    mutate: MutationArg,
}

/// Report text for standard output and the process exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

fn header(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool".into(), "sodegeom".into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("command".into(), command.into());
    m
}

fn finish(mut m: Map<String, Value>, pass: bool) -> Outcome {
    m.insert("pass".into(), pass.into());
    Outcome { stdout: to_text(&Value::Object(m)), code: if pass { 0 } else { 1 } }
}

fn failure(e: &CliError) -> Outcome {
    log::error!("{}: {}", e.kind, e.message);
    let code = if e.kind == "OracleMismatch" { 1 } else { 2 };
    Outcome { stdout: to_text(&e.to_value()), code }
}

/// Runs the tasks named by `command` on the spec text.
pub fn run_spec(command: &str, text: &str, m: Mutation) -> Result<Outcome, CliError> {
    let spec = ProblemSpec::from_json(text)?;
    let pb = spec.validate()?;
    let names: Vec<String> = match command {
        "run" if pb.tasks.is_empty() => {
            return Err(CliError::new("InvalidSpec", "`run` needs a non-empty task list").at_field("tasks"))
        }
        "run" => pb.tasks.clone(),
        t if TASKS.contains(&t) => vec![t.to_string()],
        t => return Err(CliError::new("InvalidSpec", format!("unknown task `{t}`")).at_field("task")),
    };
    let mut h = header(command);
    h.insert("dimension".into(), pb.sode.n().into());
    h.insert("F".into(), json!(pb.f_text));
    h.insert("variables".into(), json!(pb.sode.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>()));
    h.insert("seed".into(), pb.seed.into());
    h.insert("points".into(), Value::Array(pb.points.iter().map(|p| report::vec1(&p.coords())).collect()));
    let mut sections = Map::new();
    let mut pass = true;
    for name in &names {
        log::info!("task {name}");
        let s = tasks::run_task(name, &pb, m)?;
        pass &= s.pass();
        sections.insert(name.clone(), s.into_value());
    }
    h.insert("tasks".into(), Value::Object(sections));
    Ok(finish(h, pass))
}

pub fn run_selftest(m: Mutation) -> Result<Outcome, CliError> {
    let v = selftest::selftest(m)?;
    let mut h = header("selftest");
    h.insert("mutation".into(), if m == Mutation::FlipP { "flip-p" } else { "none" }.into());
    h.insert("criteria".into(), v["criteria"].clone());
    Ok(finish(h, v["pass"] == true))
}

/// Parses arguments and runs; never panics on bad input.
pub fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome { stdout: e.to_string(), code: 0 };
            }
            return failure(&CliError::new("UsageError", e.to_string().trim().to_string()));
        }
    };
    let m = match args.mutate {
        MutationArg::None => Mutation::None,
        MutationArg::FlipP => Mutation::FlipP,
    };
    let result = if args.task == "selftest" {
        run_selftest(m)
    } else {
        match &args.spec {
            None => Err(CliError::new("UsageError", "missing spec path")),
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| {
                    let mut err = CliError::new("IoError", e.to_string());
                    err.location.insert("path".into(), path.display().to_string().into());
                    err
                })
                .and_then(|text| run_spec(&args.task, &text, m)),
        }
    };
    result.unwrap_or_else(|e| failure(&e))
}

/// Entry point of the binary.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .try_init();
    let out = execute(std::env::args_os());
    print!("{}", out.stdout);
    out.code
}

#[cfg(test)]
mod tests {
    use super::*;

    const OSC: &str = r#"{"dimension":1,"F":["-x1-1.0*v1"],"samples":{"count":4,"seed":3}}"#;

    #[test]
    fn oscillator_analyze() {
        let out = run_spec("analyze", OSC, Mutation::None).unwrap();
        assert_eq!(out.code, 0, "{}", out.stdout);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        let a = &v["tasks"]["analyze"];
        assert_eq!(a["symbolic"]["P"][0][0], "3/4");
        for p in a["points"].as_array().unwrap() {
            assert_eq!(p["P"][0][0].as_f64(), Some(0.75));
            assert_eq!(p["kosambi_charpoly"], json!([1.0, 0.75]));
        }
        assert!(out.stdout.contains("7.5000000000000000e-1"));
    }

    #[test]
    fn flat_is_zero_everywhere() {
        let out = run_spec("analyze", r#"{"dimension":1,"F":["0"],"samples":{"count":3,"seed":1}}"#, Mutation::None).unwrap();
        assert_eq!(out.code, 0);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        for p in v["tasks"]["analyze"]["points"].as_array().unwrap() {
            for k in ["P", "T", "A", "B", "R"] {
                let flat: Vec<f64> = serde_json::from_value::<Vec<Value>>(p[k].clone())
                    .unwrap()
                    .iter()
                    .flat_map(fold)
                    .collect();
                assert!(flat.iter().all(|x| *x == 0.0), "{k}");
            }
        }
    }

    fn fold(v: &Value) -> Vec<f64> {
        match v {
            Value::Array(a) => a.iter().flat_map(fold).collect(),
            x => vec![x.as_f64().unwrap()],
        }
    }

    #[test]
    fn malformed_expression_is_input_error() {
        let out = run_spec("analyze", r#"{"dimension":1,"F":["x1*"],"samples":{"seed":1}}"#, Mutation::None)
            .unwrap_or_else(|e| failure(&e));
        assert_eq!(out.code, 2);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["error"]["kind"], "SyntaxError");
        assert_eq!(v["error"]["location"]["position"], 3);
    }

    #[test]
    fn mutation_trips_oracles() {
        let spec = r#"{"dimension":2,"F":["x1*v2^2 - t*v1","x2*v1*v2 + x1^2"],"samples":{"count":3,"seed":2}}"#;
        let out = run_spec("verify", spec, Mutation::FlipP).unwrap();
        assert_eq!(out.code, 1);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        let checks = v["tasks"]["verify"]["checks"].as_array().unwrap();
        let failed = |k: &str| checks.iter().any(|c| c["key"] == k && c["pass"] == false);
        assert!(failed("eq_As") && failed("torsion_oracle"));
        assert_eq!(run_spec("verify", spec, Mutation::None).unwrap().code, 0);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(execute(["sodegeom"]).code, 2);
        assert_eq!(execute(["sodegeom", "analyze"]).code, 2);
        let out = execute(["sodegeom", "analyze", "/nonexistent/spec.json"]);
        assert_eq!(out.code, 2);
        assert!(out.stdout.contains("IoError"));
        assert_eq!(execute(["sodegeom", "--version"]).code, 0);
    }

    #[test]
    fn run_uses_task_list() {
        let spec = r#"{"dimension":1,"F":["-x1"],"metric":[["1"]],"samples":{"count":3,"seed":2},"tasks":["classify","riemann"]}"#;
        let out = run_spec("run", spec, Mutation::None).unwrap();
        assert_eq!(out.code, 0, "{}", out.stdout);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert!(v["tasks"]["classify"].is_object() && v["tasks"]["riemann"].is_object());
        assert_eq!(run_spec("push", spec, Mutation::None).unwrap_err().kind, "InvalidSpec");
    }
}
