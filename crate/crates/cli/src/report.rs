use std::fmt::Write as _;
use std::io;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The query failed and the scenario said it should.
    Refused,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryRecord {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub kind: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: String,
    pub records: Vec<QueryRecord>,
}

/// Writes every float in scientific notation with 17 significant digits.
struct ScientificFloats;

impl serde_json::ser::Formatter for ScientificFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ScientificFloats);
    value.serialize(&mut ser).expect("records are serializable");
    String::from_utf8(out).expect("json is utf-8")
}

impl Report {
    pub fn has_errors(&self) -> bool {
        self.records.iter().any(|r| r.status == Status::Error)
    }

    pub fn exit_code(&self) -> i32 {
        if self.has_errors() {
            1
        } else {
            0
        }
    }

    /// One JSON object per query, one per line.
    pub fn machine(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&to_json_line(r));
            out.push('\n');
        }
        out
    }

    pub fn human(&self) -> String {
        let mut out = format!("scenario {}\n", self.scenario);
        for r in &self.records {
            let status = match r.status {
                Status::Ok => "ok",
                Status::Refused => "refused (expected)",
                Status::Error => "ERROR",
            };
            let label = r.label.as_deref().map(|l| format!(" {l}")).unwrap_or_default();
            let _ = writeln!(out, "\n[{}] {}{label}: {status}", r.index, r.kind);
            if let Some(m) = &r.message {
                let _ = writeln!(out, "  {m}");
            }
            if let Some(Value::Object(map)) = &r.result {
                for (k, v) in map {
                    write_value(&mut out, k, v, 1);
                }
            }
        }
        out
    }
}

fn number(v: &Value) -> Option<f64> {
    v.as_f64()
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => format!("{:>10}", "-"),
        Value::Number(n) if n.is_f64() => format!("{:>10.6}", n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => format!("{n:>10}"),
        Value::String(s) => format!("{s:>10}"),
        Value::Bool(b) => format!("{b:>10}"),
        other => other.to_string(),
    }
}

fn is_row(v: &Value) -> bool {
    matches!(v, Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()))
}

fn write_value(out: &mut String, key: &str, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Array(rows) if !rows.is_empty() && rows.iter().all(is_row) => {
            let _ = writeln!(out, "{pad}{key}:");
            for row in rows {
                let cells: Vec<String> = row.as_array().into_iter().flatten().map(cell).collect();
                let _ = writeln!(out, "{pad}  {}", cells.join(" "));
            }
        }
        Value::Array(items) if is_row(v) => {
            let cells: Vec<String> = items.iter().map(|x| cell(x).trim().to_string()).collect();
            let _ = writeln!(out, "{pad}{key}: [{}]", cells.join(", "));
        }
        Value::Array(items) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (i, item) in items.iter().enumerate() {
                write_value(out, &format!("- {i}"), item, depth + 1);
            }
        }
        Value::Object(map) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (k, x) in map {
                write_value(out, k, x, depth + 1);
            }
        }
        other => {
            let text = match number(other) {
                Some(x) if other.is_f64() => format!("{x:.6e}"),
                _ => cell(other).trim().to_string(),
            };
            let _ = writeln!(out, "{pad}{key}: {text}");
        }
    }
}
