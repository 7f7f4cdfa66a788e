//! Report values, checks, and the fixed-precision JSON writer.

use std::io;

use serde::Serialize;
use serde_json::{json, Value};

/// One residual compared with its tolerance. `key` is from the closed
/// vocabulary listed in the format reference.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub key: &'static str,
    pub value: Value,
    pub tolerance: Value,
    pub pass: bool,
    /// which input the check ran on, when a suite runs it several times
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
}

impl Check {
    /// Passes when `value ≤ tolerance`; NaN never passes.
    pub fn max(key: &'static str, value: f64, tolerance: f64) -> Check {
        Check { key, value: num(value), tolerance: num(tolerance), pass: value <= tolerance, case: None }
    }

    pub fn min(key: &'static str, value: f64, bound: f64) -> Check {
        Check { key, value: num(value), tolerance: num(bound), pass: value >= bound, case: None }
    }

    pub fn equal<T: Serialize + PartialEq>(key: &'static str, value: T, expected: T) -> Check {
        let pass = value == expected;
        Check { key, value: json!(value), tolerance: json!(expected), pass, case: None }
    }
}

/// Section of a report: free-form results plus its checks.
#[derive(Clone, Debug, Default)]
pub struct Section {
    pub results: serde_json::Map<String, Value>,
    pub checks: Vec<Check>,
}

impl Section {
    pub fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.to_string(), v.into());
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn into_value(self) -> Value {
        let pass = self.pass();
        let mut m = self.results;
        m.insert("checks".into(), serde_json::to_value(&self.checks).expect("checks serialize"));
        m.insert("pass".into(), Value::Bool(pass));
        Value::Object(m)
    }
}

/// Non-finite values become `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn vec1(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn vec2(v: &[Vec<f64>]) -> Value {
    Value::Array(v.iter().map(|r| vec1(r)).collect())
}

pub fn vec3(v: &[Vec<Vec<f64>>]) -> Value {
    Value::Array(v.iter().map(|r| vec2(r)).collect())
}

pub fn vec4(v: &[Vec<Vec<Vec<f64>>>]) -> Value {
    Value::Array(v.iter().map(|r| vec3(r)).collect())
}

/// Writes floats as `d.dddddddddddddddde±x` (17 significant digits).
#[derive(Clone, Copy, Debug, Default)]
pub struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

/// Compact JSON text with [`FixedFloats`], newline-terminated.
pub fn to_text(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    v.serialize(&mut ser).expect("serializing a Value cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}
