use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub p: u32,
    pub n: Value,
    pub mode: String,
    pub precision: u32,
    pub seed: u64,
    #[serde(rename = "toolVersion")]
    pub tool_version: String,
}

/// A finished report. `body` is the canonical JSON; `rows` is what the CSV
/// projection shows, one object per line.
#[derive(Debug)]
pub struct Report {
    pub header: Header,
    pub body: Map<String, Value>,
    pub rows: Vec<Value>,
    /// Human-readable lines for stderr.
    pub notes: Vec<String>,
    /// Non-empty means an invariant was contradicted.
    pub falsified: Vec<String>,
}

impl Report {
    pub fn new(header: Header) -> Self {
        Report { header, body: Map::new(), rows: Vec::new(), notes: Vec::new(), falsified: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.body.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn rows_from<T: Serialize>(&mut self, rows: &[T]) {
        self.rows = rows.iter().map(|r| serde_json::to_value(r).expect("serializable")).collect();
    }

    pub fn to_json(&self) -> String {
        let mut top = Map::new();
        top.insert("header".into(), serde_json::to_value(&self.header).expect("serializable"));
        for (k, v) in &self.body {
            top.insert(k.clone(), v.clone());
        }
        if !self.falsified.is_empty() {
            top.insert("falsified".into(), Value::from(self.falsified.clone()));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("serializable");
        s.push('\n');
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fixed = ["toolVersion", "p", "mode", "precision", "seed"];
        let columns: Vec<String> = match self.rows.first() {
            Some(Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        };
        let mut head: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
        head.extend(columns.iter().cloned());
        w.write_record(&head)?;
        let prefix = [
            self.header.tool_version.clone(),
            self.header.p.to_string(),
            self.header.mode.clone(),
            self.header.precision.to_string(),
            self.header.seed.to_string(),
        ];
        for row in &self.rows {
            let mut rec: Vec<String> = prefix.to_vec();
            for c in &columns {
                rec.push(cell(row.get(c).unwrap_or(&Value::Null)));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}
