//! Report rendering: JSON with a schema tag and fixed float precision, or
//! aligned text.

use serde_json::{Map, Number, Value};

pub const SCHEMA: &str = "pmm-report/1";
const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds a float to nine significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every non-integer number in `v`; infinities become strings.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            Number::from_f64(round_sig(x)).map_or_else(|| Value::String(x.to_string()), Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// `f64` values serialize as `null` when not finite; this keeps them readable.
pub fn float(x: f64) -> Value {
    Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

pub struct Report {
    command: &'static str,
    body: Map<String, Value>,
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report { command, body: Map::new(), lines: Vec::new() }
    }

    /// Adds a field to the JSON body only.
    pub fn field(&mut self, key: &str, value: impl serde::Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.body.insert(key.to_string(), v);
        self
    }

    /// Adds a line to the text rendering only.
    pub fn line(&mut self, label: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.lines.push((label.into(), value.into()));
        self
    }

    pub fn to_json(&self) -> Value {
        let mut out = Map::new();
        out.insert("schema".into(), Value::String(SCHEMA.into()));
        out.insert("command".into(), Value::String(self.command.into()));
        for (k, v) in &self.body {
            out.insert(k.clone(), v.clone());
        }
        normalize(Value::Object(out))
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            return serde_json::to_string_pretty(&self.to_json()).expect("report serializes") + "\n";
        }
        let width = self.lines.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (label, value) in &self.lines {
            out.push_str(&format!("{label:<width$}  {value}\n"));
        }
        out
    }
}

/// Formats a float for text output with nine significant digits.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        let r = round_sig(x);
        if r != 0.0 && !(1e-4..1e9).contains(&r.abs()) {
            format!("{r:e}")
        } else {
            format!("{r}")
        }
    } else {
        x.to_string()
    }
}

pub fn fmt_list(xs: &[f64]) -> String {
    format!("({})", xs.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(", "))
}
