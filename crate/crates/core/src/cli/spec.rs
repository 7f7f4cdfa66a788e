//! Input schema and its validation into library objects.

use serde::Deserialize;

use super::CliError;
use crate::natjets::VerticalAutomorphism;
use crate::riemann::MetricField;
use crate::sode::random::{random_points, SampleBox};
use crate::sode::{ExprMatrix, JetPoint1, SodeSystem};
use crate::symexpr::{parse, Expr, Role, VarSet};

pub const TASKS: [&str; 6] = ["analyze", "classify", "verify", "push", "jets", "riemann"];

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variables {
    pub t: String,
    pub x: Vec<String>,
    pub v: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismSpec {
    pub phi: Vec<String>,
    #[serde(default)]
    pub inverse: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    #[default]
    Random,
    Explicit,
}

fn default_count() -> usize {
    20
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    #[serde(default)]
    pub mode: SampleMode,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default, rename = "box")]
    pub sample_box: Option<SampleBox>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// `[t, x.., v..]` rows for explicit mode.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub identity: f64,
    pub oracle: f64,
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances { identity: 1e-9, oracle: 1e-6, rank: 1e-8 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dimension: usize,
    #[serde(default)]
    pub variables: Option<Variables>,
    #[serde(rename = "F")]
    pub f: Vec<String>,
    #[serde(default)]
    pub metric: Option<Vec<Vec<String>>>,
    #[serde(default, rename = "U")]
    pub u: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub automorphism: Option<AutomorphismSpec>,
    /// vertical field for the infinitesimal checks of the `jets` task
    #[serde(default)]
    pub field: Option<Vec<String>>,
    pub samples: Samples,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub tasks: Vec<String>,
}

/// Validated problem: parsed expressions and concrete sample points.
#[derive(Clone, Debug)]
pub struct Problem {
    pub sode: SodeSystem,
    pub f_text: Vec<String>,
    pub metric: Option<MetricField>,
    pub u: Option<ExprMatrix>,
    pub automorphism: Option<VerticalAutomorphism>,
    pub field: Option<Vec<Expr>>,
    pub points: Vec<JetPoint1>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub tasks: Vec<String>,
}

fn invalid(message: impl Into<String>, field: &str) -> CliError {
    CliError::new("InvalidSpec", message).at_field(field)
}

fn parse_at(text: &str, vars: &VarSet, field: String) -> Result<Expr, CliError> {
    parse(text, vars).map_err(|e| CliError::from(crate::Error::from(e)).at_field(&field))
}

fn parse_matrix(rows: &[Vec<String>], n: usize, vars: &VarSet, name: &str) -> Result<ExprMatrix, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("{name} must be {n}x{n}"), name));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, e)| parse_at(e, vars, format!("{name}[{i}][{j}]"))).collect())
        .collect()
}

fn parse_list(items: &[String], n: usize, vars: &VarSet, name: &str) -> Result<Vec<Expr>, CliError> {
    if items.len() != n {
        return Err(invalid(format!("{name} needs {n} entries, got {}", items.len()), name));
    }
    items.iter().enumerate().map(|(i, e)| parse_at(e, vars, format!("{name}[{i}]"))).collect()
}

fn var_set(spec: &ProblemSpec) -> Result<VarSet, CliError> {
    let n = spec.dimension;
    let Some(v) = &spec.variables else { return Ok(VarSet::standard(n)) };
    if v.x.len() != n || v.v.len() != n {
        return Err(invalid(format!("variables need {n} positions and {n} velocities"), "variables"));
    }
    let all = std::iter::once((v.t.as_str(), Role::Time))
        .chain(v.x.iter().map(|s| (s.as_str(), Role::Position)))
        .chain(v.v.iter().map(|s| (s.as_str(), Role::Velocity)));
    VarSet::new(all).map_err(|e| CliError::from(e).at_field("variables"))
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<ProblemSpec, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::new("JsonError", e.to_string()).at_json(e.line(), e.column())
        })
    }

    pub fn validate(&self) -> Result<Problem, CliError> {
        let n = self.dimension;
        if n == 0 {
            return Err(invalid("dimension must be positive", "dimension"));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if !TASKS.contains(&t.as_str()) {
                return Err(invalid(format!("unknown task `{t}`"), &format!("tasks[{i}]")));
            }
        }
        let vars = var_set(self)?;
        let f = parse_list(&self.f, n, &vars, "F")?;
        let sode = SodeSystem::new(vars.clone(), f).map_err(CliError::from)?;
        let metric = match &self.metric {
            None => None,
            Some(rows) => {
                let g = parse_matrix(rows, n, &vars, "metric")?;
                Some(MetricField::new(vars.clone(), g).map_err(|e| CliError::from(e).at_field("metric"))?)
            }
        };
        let u = self.u.as_ref().map(|rows| parse_matrix(rows, n, &vars, "U")).transpose()?;
        let automorphism = match &self.automorphism {
            None => None,
            Some(a) => {
                let phi = parse_list(&a.phi, n, &vars, "automorphism.phi")?;
                let inv = a.inverse.as_ref().map(|i| parse_list(i, n, &vars, "automorphism.inverse")).transpose()?;
                Some(
                    VerticalAutomorphism::new(&sode, phi, inv)
                        .map_err(|e| CliError::from(e).at_field("automorphism"))?,
                )
            }
        };
        let field = self.field.as_ref().map(|f| parse_list(f, n, &vars, "field")).transpose()?;
        let (points, seed) = self.points(n)?;
        Ok(Problem {
            sode,
            f_text: self.f.clone(),
            metric,
            u,
            automorphism,
            field,
            points,
            tolerances: self.tolerances,
            seed,
            tasks: self.tasks.clone(),
        })
    }

    fn points(&self, n: usize) -> Result<(Vec<JetPoint1>, u64), CliError> {
        let s = &self.samples;
        match s.mode {
            SampleMode::Random => {
                let seed = s.seed.ok_or_else(|| invalid("random sampling needs a seed", "samples.seed"))?;
                if s.count == 0 {
                    return Err(invalid("count must be positive", "samples.count"));
                }
                let b = s.sample_box.clone().unwrap_or_default();
                for (name, r) in [("t", b.t), ("x", b.x), ("v", b.v)] {
                    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                        return Err(invalid("box bounds must be finite and ordered", &format!("samples.box.{name}")));
                    }
                }
                Ok((random_points(n, s.count, seed, &b), seed))
            }
            SampleMode::Explicit => {
                let rows = s.points.as_ref().ok_or_else(|| invalid("explicit sampling needs points", "samples.points"))?;
                if rows.is_empty() {
                    return Err(invalid("no points given", "samples.points"));
                }
                let pts = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        if r.len() != 2 * n + 1 || r.iter().any(|x| !x.is_finite()) {
                            Err(invalid(format!("point needs {} finite coordinates", 2 * n + 1), &format!("samples.points[{i}]")))
                        } else {
                            Ok(JetPoint1::from_coords(r))
                        }
                    })
                    .collect::<Result<_, _>>()?;
                Ok((pts, s.seed.unwrap_or(0)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> Result<Problem, CliError> {
        ProblemSpec::from_json(json)?.validate()
    }

    #[test]
    fn minimal_random() {
        let p = spec(r#"{"dimension":1,"F":["0"],"samples":{"count":3,"seed":1}}"#).unwrap();
        assert_eq!(p.points.len(), 3);
        assert_eq!(p.tolerances.identity, 1e-9);
    }

    #[test]
    fn seed_required() {
        let e = spec(r#"{"dimension":1,"F":["0"],"samples":{"count":3}}"#).unwrap_err();
        assert_eq!(e.kind, "InvalidSpec");
    }

    #[test]
    fn syntax_error_location() {
        let e = spec(r#"{"dimension":1,"F":["x1*"],"samples":{"seed":1}}"#).unwrap_err();
        assert_eq!(e.kind, "SyntaxError");
        assert_eq!(e.location["field"], "F[0]");
        assert_eq!(e.location["position"], 3);
    }

    #[test]
    fn rejects_unknown_task_and_key() {
        let e = spec(r#"{"dimension":1,"F":["0"],"samples":{"seed":1},"tasks":["plot"]}"#).unwrap_err();
        assert_eq!(e.location["field"], "tasks[0]");
        let e = spec(r#"{"dimension":1,"F":["0"],"samples":{"seed":1},"extra":1}"#).unwrap_err();
        assert_eq!(e.kind, "JsonError");
    }

    #[test]
    fn custom_variables_and_points() {
        let p = spec(
            r#"{"dimension":1,"variables":{"t":"s","x":["q"],"v":["w"]},"F":["-q"],
                "samples":{"mode":"explicit","points":[[0,1,2]]}}"#,
        )
        .unwrap();
        assert_eq!(p.sode.x_var(0), "q");
        assert_eq!(p.points[0].v, vec![2.0]);
    }
}
