//! Report records and their JSON-lines and CSV renderings.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{ExperimentConfig, Format};

/// The deterministic part of a report: one row per prime (or per evidence
/// line) and a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub rows: Vec<Value>,
    pub summary: Value,
}

/// Fields shared by every emitted line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportHeader {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
}

impl ReportHeader {
    pub fn new(config: &ExperimentConfig, config_hash: String) -> Self {
        ReportHeader {
            command: config.command.name().to_string(),
            config_hash,
            version: qharm_core::VERSION.to_string(),
            seed: config.seed,
        }
    }
}

fn merged(header: &ReportHeader, record: &str, body: &Value) -> Value {
    let mut out = match serde_json::to_value(header).expect("header serializes") {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    out.insert("record".into(), Value::from(record));
    match body {
        Value::Object(m) => out.extend(m.clone()),
        other => {
            out.insert("value".into(), other.clone());
        }
    }
    Value::Object(out)
}

/// JSON lines: every row tagged `"record": "row"`, then one summary line with
/// the configuration and wall time.
pub fn json_lines(header: &ReportHeader, config: &ExperimentConfig, payload: &Payload, wall_ms: u128) -> String {
    let mut out = String::new();
    for row in &payload.rows {
        out.push_str(&merged(header, "row", row).to_string());
        out.push('\n');
    }
    let mut summary = merged(header, "summary", &payload.summary);
    if let Value::Object(m) = &mut summary {
        m.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
        m.insert("wall_time_ms".into(), Value::from(wall_ms as u64));
    }
    out.push_str(&summary.to_string());
    out.push('\n');
    out
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

/// The rows as CSV, columns in order of first appearance.
pub fn csv(payload: &Payload) -> String {
    let mut columns: Vec<String> = Vec::new();
    for row in &payload.rows {
        if let Value::Object(m) = row {
            for k in m.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
    }
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(&columns).expect("in-memory write");
    let empty = Map::new();
    for row in &payload.rows {
        let m = row.as_object().unwrap_or(&empty);
        w.write_record(columns.iter().map(|c| m.get(c).map(cell).unwrap_or_default())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

pub fn render(
    header: &ReportHeader,
    config: &ExperimentConfig,
    payload: &Payload,
    wall_ms: u128,
    format: Format,
) -> String {
    match format {
        Format::Json => json_lines(header, config, payload, wall_ms),
        Format::Csv => csv(payload),
    }
}
