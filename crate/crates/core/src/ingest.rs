//! Report, tenure and weather file readers and writers.
//!
//! Readers are total over their input: a malformed record is skipped and
//! reported as exactly one error [`Diagnostic`], and only input that cannot
//! be read at all (bad UTF-8, a missing CSV header, a tenure document that
//! is not JSON) aborts with [`IngestError`].
//!
//! Report files come in two formats. Line-delimited JSON has one object per
//! line with the report's field names; `count` is either a JSON number or a
//! bin label string, and `elevation`/`aspect` are nested objects:
//!
//! ```text
//! {"report_id":"r1","operation_id":"op-a","reported_at":"2020-01-15T17:00:00Z",
//!  "occurred_on":"2020-01-15","count":"several","size":2.0,"trigger":"natural",
//!  "problem_type":"storm-slab","elevation":{"min_m":1800.0,"max_m":2400.0},
//!  "aspect":{"start_deg":315.0,"end_deg":45.0,"full_circle":false},
//!  "percent_observed":40,"comment":""}
//! ```
//!
//! CSV files use the fixed header in [`REPORT_CSV_HEADER`].

use std::collections::HashSet;
use std::path::Path;

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::Config;
use crate::model::{
    AspectInterval, AvalancheCount, DestructiveSize, ElevationInterval, OperationTenure,
    OrdinalBinTable, Report, WeatherReading, UNSPECIFIED,
};

pub const REPORT_CSV_HEADER: &[&str] = &[
    "report_id",
    "operation_id",
    "reported_at",
    "occurred_on",
    "count",
    "size",
    "trigger",
    "problem_type",
    "elevation_min_m",
    "elevation_max_m",
    "aspect_start_deg",
    "aspect_end_deg",
    "aspect_full_circle",
    "percent_observed",
    "comment",
];

pub const WEATHER_CSV_HEADER: &[&str] = &[
    "station_id",
    "timestamp",
    "precip_mm",
    "wind_speed_kmh",
    "wind_dir_deg",
    "temp_c",
];

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("unreadable input: {0}")]
    UnreadableInput(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unparseable count {0:?}")]
pub struct UnparseableCount(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// A problem found in one input record. `record` is the 1-based line number
/// of the record in its file (for GeoJSON, the 1-based feature index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub record: usize,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(record: usize, code: &str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            record,
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn warning(record: usize, code: &str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            record,
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] record {}: {}", self.code, self.record, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Jsonl,
    Csv,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Some(ReportFormat::Jsonl),
            "csv" => Some(ReportFormat::Csv),
            _ => None,
        }
    }
}

/// Reads a count token: all digits is a number, a bin label (any case,
/// surrounding whitespace ignored) is that ordinal bin.
pub fn parse_count_field(
    text: &str,
    bins: &OrdinalBinTable,
) -> Result<AvalancheCount, UnparseableCount> {
    let token = text.trim();
    if !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) {
        return token
            .parse::<u32>()
            .map(AvalancheCount::numeric)
            .map_err(|_| UnparseableCount(text.to_string()));
    }
    bins.lookup(token)
        .cloned()
        .map(AvalancheCount::Ordinal)
        .ok_or_else(|| UnparseableCount(text.to_string()))
}

fn decode_utf8(input: &[u8]) -> Result<&str, IngestError> {
    let text = std::str::from_utf8(input)
        .map_err(|e| IngestError::UnreadableInput(format!("not UTF-8: {e}")))?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text))
}

/// Field values of one report record as text, before validation.
#[derive(Debug, Default)]
struct RawReport {
    report_id: Option<String>,
    operation_id: Option<String>,
    reported_at: Option<String>,
    occurred_on: Option<String>,
    count: Option<String>,
    size: Option<String>,
    trigger: Option<String>,
    problem_type: Option<String>,
    elevation_min: Option<String>,
    elevation_max: Option<String>,
    aspect_start: Option<String>,
    aspect_end: Option<String>,
    aspect_full: Option<String>,
    percent_observed: Option<String>,
    comment: Option<String>,
}

fn value_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        other => Some(other.to_string()),
    }
}

impl RawReport {
    fn from_json(obj: &Map<String, Value>) -> Self {
        let get = |k: &str| obj.get(k).and_then(value_text);
        let nested = |outer: &str, k: &str| {
            obj.get(outer)
                .and_then(Value::as_object)
                .and_then(|o| o.get(k))
                .and_then(value_text)
        };
        RawReport {
            report_id: get("report_id"),
            operation_id: get("operation_id"),
            reported_at: get("reported_at"),
            occurred_on: get("occurred_on"),
            count: get("count"),
            size: get("size"),
            trigger: get("trigger"),
            problem_type: get("problem_type"),
            elevation_min: nested("elevation", "min_m"),
            elevation_max: nested("elevation", "max_m"),
            aspect_start: nested("aspect", "start_deg"),
            aspect_end: nested("aspect", "end_deg"),
            aspect_full: nested("aspect", "full_circle"),
            percent_observed: get("percent_observed"),
            comment: get("comment"),
        }
    }

    fn from_csv(rec: &csv::StringRecord) -> Self {
        let get = |i: usize| {
            rec.get(i)
                .map(str::to_string)
                .filter(|s| !s.trim().is_empty())
        };
        RawReport {
            report_id: get(0),
            operation_id: get(1),
            reported_at: get(2),
            occurred_on: get(3),
            count: get(4),
            size: get(5),
            trigger: get(6),
            problem_type: get(7),
            elevation_min: get(8),
            elevation_max: get(9),
            aspect_start: get(10),
            aspect_end: get(11),
            aspect_full: get(12),
            percent_observed: get(13),
            // comments keep their whitespace verbatim
            comment: rec.get(14).map(str::to_string),
        }
    }

    fn validate(self, record: usize, config: &Config) -> Result<Report, Diagnostic> {
        let err = |code: &str, msg: String| Diagnostic::error(record, code, msg);
        let required = |v: Option<String>, name: &str| {
            v.map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .ok_or_else(|| err("MISSING_FIELD", format!("missing required field {name}")))
        };
        let number = |v: String, code: &str, name: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(code, format!("{name} is not a number: {v:?}")))
        };

        let report_id = required(self.report_id, "report_id")?;
        let operation_id = required(self.operation_id, "operation_id")?;
        let reported_at_text = required(self.reported_at, "reported_at")?;
        let reported_at = DateTime::parse_from_rfc3339(&reported_at_text)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| err("BAD_TIMESTAMP", format!("reported_at {reported_at_text:?}: {e}")))?;
        let occurred_text = required(self.occurred_on, "occurred_on")?;
        let occurred_on = NaiveDate::parse_from_str(&occurred_text, "%Y-%m-%d")
            .map_err(|e| err("BAD_DATE", format!("occurred_on {occurred_text:?}: {e}")))?;
        if occurred_on > reported_at.date_naive() {
            return Err(err(
                "OCCURRED_AFTER_REPORT",
                format!("occurred_on {occurred_on} is after the report date {}", reported_at.date_naive()),
            ));
        }
        let count_text = required(self.count, "count")?;
        let count = parse_count_field(&count_text, &config.bins)
            .map_err(|e| err("UNPARSEABLE_COUNT", e.to_string()))?;
        let size_text = required(self.size, "size")?;
        let size = number(size_text, "BAD_SIZE", "size")
            .and_then(|v| DestructiveSize::from_value(v).map_err(|e| err("BAD_SIZE", e.to_string())))?;

        let trigger = vocab_token(self.trigger);
        if !config.vocabulary.has_trigger(&trigger) {
            return Err(err("UNKNOWN_TRIGGER", format!("trigger {trigger:?} not in vocabulary")));
        }
        let problem_type = vocab_token(self.problem_type);
        if !config.vocabulary.has_problem_type(&problem_type) {
            return Err(err(
                "UNKNOWN_PROBLEM_TYPE",
                format!("problem_type {problem_type:?} not in vocabulary"),
            ));
        }

        let emin = number(required(self.elevation_min, "elevation.min_m")?, "BAD_ELEVATION", "elevation min")?;
        let emax = number(required(self.elevation_max, "elevation.max_m")?, "BAD_ELEVATION", "elevation max")?;
        if emin > emax {
            return Err(err("ELEV_INVERTED", format!("elevation min {emin} > max {emax}")));
        }
        let elevation = ElevationInterval::new(emin, emax)
            .map_err(|e| err("BAD_ELEVATION", e.to_string()))?;

        let full = match self.aspect_full.as_deref().map(str::trim) {
            None | Some("") | Some("false") | Some("0") => false,
            Some("true") | Some("1") => true,
            Some(other) => {
                return Err(err("BAD_ASPECT", format!("aspect full_circle {other:?} is not a boolean")))
            }
        };
        let aspect = if full && self.aspect_start.is_none() && self.aspect_end.is_none() {
            AspectInterval::full()
        } else {
            let s = number(required(self.aspect_start, "aspect.start_deg")?, "BAD_ASPECT", "aspect start")?;
            let e = number(required(self.aspect_end, "aspect.end_deg")?, "BAD_ASPECT", "aspect end")?;
            AspectInterval::new(s, e, full).map_err(|e| err("BAD_ASPECT", e.to_string()))?
        };

        let pct_text = required(self.percent_observed, "percent_observed")?;
        let percent_observed = pct_text
            .parse::<u8>()
            .ok()
            .filter(|p| *p <= 100)
            .ok_or_else(|| err("BAD_PERCENT", format!("percent_observed {pct_text:?} not an integer in 0..=100")))?;

        Ok(Report {
            report_id,
            operation_id,
            reported_at,
            occurred_on,
            count,
            size,
            trigger,
            problem_type,
            elevation,
            aspect,
            percent_observed,
            comment: self.comment.unwrap_or_default(),
        })
    }
}

fn vocab_token(v: Option<String>) -> String {
    match v.map(|s| s.trim().to_lowercase()) {
        Some(s) if !s.is_empty() => s,
        _ => UNSPECIFIED.to_string(),
    }
}

/// Parses a report file. Accepted reports keep file order.
pub fn parse_reports(
    input: &[u8],
    format: ReportFormat,
    config: &Config,
) -> Result<(Vec<Report>, Vec<Diagnostic>), IngestError> {
    let text = decode_utf8(input)?;
    let mut raws: Vec<(usize, Result<RawReport, Diagnostic>)> = Vec::new();
    match format {
        ReportFormat::Jsonl => {
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record = idx + 1;
                let raw = match serde_json::from_str::<Value>(line) {
                    Ok(Value::Object(obj)) => Ok(RawReport::from_json(&obj)),
                    Ok(_) => Err(Diagnostic::error(record, "BAD_JSON", "record is not a JSON object")),
                    Err(e) => Err(Diagnostic::error(record, "BAD_JSON", e.to_string())),
                };
                raws.push((record, raw));
            }
        }
        ReportFormat::Csv => {
            let mut reader = csv_reader(text);
            check_header(&mut reader, REPORT_CSV_HEADER)?;
            for (idx, rec) in reader.records().enumerate() {
                let (record, raw) = match rec {
                    Ok(rec) => {
                        let line = rec.position().map_or(idx + 2, |p| p.line() as usize);
                        if rec.len() != REPORT_CSV_HEADER.len() {
                            let msg = format!("expected {} columns, found {}", REPORT_CSV_HEADER.len(), rec.len());
                            (line, Err(Diagnostic::error(line, "BAD_CSV", msg)))
                        } else {
                            (line, Ok(RawReport::from_csv(&rec)))
                        }
                    }
                    Err(e) => {
                        let line = e.position().map_or(idx + 2, |p| p.line() as usize);
                        (line, Err(Diagnostic::error(line, "BAD_CSV", e.to_string())))
                    }
                };
                raws.push((record, raw));
            }
        }
    }

    let mut reports = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen = HashSet::new();
    for (record, raw) in raws {
        match raw.and_then(|r| r.validate(record, config)) {
            Ok(report) => {
                if seen.insert(report.report_id.clone()) {
                    reports.push(report);
                } else {
                    diagnostics.push(Diagnostic::error(
                        record,
                        "DUPLICATE_REPORT_ID",
                        format!("report_id {:?} already seen", report.report_id),
                    ));
                }
            }
            Err(d) => diagnostics.push(d),
        }
    }
    Ok((reports, diagnostics))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn check_header(reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), IngestError> {
    let header = reader
        .headers()
        .map_err(|e| IngestError::UnreadableInput(format!("cannot read CSV header: {e}")))?;
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found.len() == 1 && found[0].is_empty() {
        return Err(IngestError::UnreadableInput("missing CSV header".into()));
    }
    if found != expected {
        return Err(IngestError::UnreadableInput(format!(
            "unexpected CSV header {:?}, expected {:?}",
            found.join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

fn fmt_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn count_token(count: &AvalancheCount) -> String {
    match count {
        AvalancheCount::Numeric { n } => n.to_string(),
        AvalancheCount::Ordinal(bin) => bin.label().to_string(),
    }
}

/// Writes reports in `format`. Ordinal counts are written as their labels.
pub fn serialize_reports(reports: &[Report], format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Jsonl => {
            let mut out = Vec::new();
            for r in reports {
                let count = match &r.count {
                    AvalancheCount::Numeric { n } => json!(n),
                    AvalancheCount::Ordinal(bin) => json!(bin.label()),
                };
                // field order is fixed by construction of an ordered map
                let mut obj = Map::new();
                obj.insert("report_id".into(), json!(r.report_id));
                obj.insert("operation_id".into(), json!(r.operation_id));
                obj.insert("reported_at".into(), json!(fmt_time(&r.reported_at)));
                obj.insert("occurred_on".into(), json!(r.occurred_on.to_string()));
                obj.insert("count".into(), count);
                obj.insert("size".into(), json!(r.size.value()));
                obj.insert("trigger".into(), json!(r.trigger));
                obj.insert("problem_type".into(), json!(r.problem_type));
                obj.insert(
                    "elevation".into(),
                    json!({"min_m": r.elevation.min_m(), "max_m": r.elevation.max_m()}),
                );
                obj.insert(
                    "aspect".into(),
                    json!({
                        "start_deg": r.aspect.start_deg(),
                        "end_deg": r.aspect.end_deg(),
                        "full_circle": r.aspect.is_full_circle(),
                    }),
                );
                obj.insert("percent_observed".into(), json!(r.percent_observed));
                obj.insert("comment".into(), json!(r.comment));
                serde_json::to_writer(&mut out, &Value::Object(obj)).expect("in-memory write");
                out.push(b'\n');
            }
            out
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(REPORT_CSV_HEADER).expect("in-memory write");
            for r in reports {
                w.write_record([
                    r.report_id.clone(),
                    r.operation_id.clone(),
                    fmt_time(&r.reported_at),
                    r.occurred_on.to_string(),
                    count_token(&r.count),
                    r.size.value().to_string(),
                    r.trigger.clone(),
                    r.problem_type.clone(),
                    r.elevation.min_m().to_string(),
                    r.elevation.max_m().to_string(),
                    r.aspect.start_deg().to_string(),
                    r.aspect.end_deg().to_string(),
                    r.aspect.is_full_circle().to_string(),
                    r.percent_observed.to_string(),
                    r.comment.clone(),
                ])
                .expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
    }
}

/// Reads a GeoJSON FeatureCollection of Polygon features. Each feature needs
/// an `operation_id` property; `display_name` defaults to the id with a
/// warning.
pub fn parse_tenures(input: &[u8]) -> Result<(Vec<OperationTenure>, Vec<Diagnostic>), IngestError> {
    let text = decode_utf8(input)?;
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| IngestError::UnreadableInput(format!("malformed JSON: {e}")))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::UnreadableInput("expected a GeoJSON FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::UnreadableInput("FeatureCollection has no features array".into()))?;

    let mut tenures = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen = HashSet::new();
    for (idx, feature) in features.iter().enumerate() {
        let record = idx + 1;
        match parse_feature(feature, record, &mut diagnostics) {
            Ok(t) if !seen.insert(t.operation_id.clone()) => diagnostics.push(Diagnostic::error(
                record,
                "DUPLICATE_OP_ID",
                format!("operation_id {:?} already defined", t.operation_id),
            )),
            Ok(t) => tenures.push(t),
            Err(d) => diagnostics.push(d),
        }
    }
    Ok((tenures, diagnostics))
}

fn parse_feature(
    feature: &Value,
    record: usize,
    warnings: &mut Vec<Diagnostic>,
) -> Result<OperationTenure, Diagnostic> {
    let props = feature.get("properties").and_then(Value::as_object);
    let prop = |k: &str| {
        props
            .and_then(|p| p.get(k))
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|s| !s.is_empty())
    };
    let operation_id = prop("operation_id")
        .ok_or_else(|| Diagnostic::error(record, "MISSING_OP_ID", "feature has no operation_id property"))?
        .to_string();
    let display_name = match prop("display_name") {
        Some(n) => n.to_string(),
        None => {
            warnings.push(Diagnostic::warning(
                record,
                "MISSING_DISPLAY_NAME",
                format!("feature {operation_id:?} has no display_name; using the id"),
            ));
            operation_id.clone()
        }
    };
    let geometry = feature
        .get("geometry")
        .ok_or_else(|| Diagnostic::error(record, "BAD_GEOMETRY", "feature has no geometry"))?;
    match geometry.get("type").and_then(Value::as_str) {
        Some("Polygon") => {}
        Some(other) => {
            return Err(Diagnostic::error(
                record,
                "UNSUPPORTED_GEOMETRY",
                format!("geometry type {other} is not Polygon"),
            ))
        }
        None => return Err(Diagnostic::error(record, "BAD_GEOMETRY", "geometry has no type")),
    }
    let bad = |msg: &str| Diagnostic::error(record, "BAD_GEOMETRY", msg);
    let rings_json = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("Polygon has no coordinates array"))?;
    let mut rings = Vec::with_capacity(rings_json.len());
    for ring in rings_json {
        let pts = ring.as_array().ok_or_else(|| bad("ring is not an array"))?;
        let mut vertices = Vec::with_capacity(pts.len());
        for p in pts {
            let pair = p
                .as_array()
                .filter(|a| a.len() >= 2)
                .and_then(|a| Some([a[0].as_f64()?, a[1].as_f64()?]))
                .ok_or_else(|| bad("vertex is not a [lon, lat] pair"))?;
            vertices.push(pair);
        }
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        rings.push(vertices);
    }
    OperationTenure::new(operation_id, display_name, rings).map_err(|e| {
        use crate::model::DomainError::*;
        let code = match e {
            RingTooShort { .. } => "RING_TOO_SHORT",
            SelfIntersecting(_) => "SELF_INTERSECTING",
            _ => "BAD_GEOMETRY",
        };
        Diagnostic::error(record, code, e.to_string())
    })
}

/// Writes tenures as a GeoJSON FeatureCollection with closed rings.
pub fn serialize_tenures(tenures: &[OperationTenure]) -> Vec<u8> {
    let features: Vec<Value> = tenures
        .iter()
        .map(|t| {
            let rings: Vec<Vec<[f64; 2]>> = t
                .rings
                .iter()
                .map(|r| {
                    let mut closed = r.clone();
                    closed.push(r[0]);
                    closed
                })
                .collect();
            json!({
                "type": "Feature",
                "properties": {"operation_id": t.operation_id, "display_name": t.display_name},
                "geometry": {"type": "Polygon", "coordinates": rings},
            })
        })
        .collect();
    let mut out = serde_json::to_vec_pretty(&json!({"type": "FeatureCollection", "features": features}))
        .expect("in-memory write");
    out.push(b'\n');
    out
}

/// Reads weather telemetry CSV. Empty cells are missing values. Output is
/// ordered by station, then strictly increasing timestamp.
pub fn parse_weather(input: &[u8]) -> Result<(Vec<WeatherReading>, Vec<Diagnostic>), IngestError> {
    let text = decode_utf8(input)?;
    let mut reader = csv_reader(text);
    check_header(&mut reader, WEATHER_CSV_HEADER)?;
    let mut readings: Vec<(usize, WeatherReading)> = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(idx + 2, |p| p.line() as usize);
                diagnostics.push(Diagnostic::error(line, "BAD_CSV", e.to_string()));
                continue;
            }
        };
        let line = rec.position().map_or(idx + 2, |p| p.line() as usize);
        match weather_record(&rec, line) {
            Ok(r) => readings.push((line, r)),
            Err(d) => diagnostics.push(d),
        }
    }
    readings.sort_by(|(la, a), (lb, b)| {
        (a.station_id.as_str(), a.timestamp, la).cmp(&(b.station_id.as_str(), b.timestamp, lb))
    });
    let mut out: Vec<WeatherReading> = Vec::with_capacity(readings.len());
    for (line, r) in readings {
        if let Some(prev) = out.last() {
            if prev.station_id == r.station_id && prev.timestamp == r.timestamp {
                diagnostics.push(Diagnostic::error(
                    line,
                    "DUPLICATE_TIMESTAMP",
                    format!("station {} already has a reading at {}", r.station_id, fmt_time(&r.timestamp)),
                ));
                continue;
            }
        }
        out.push(r);
    }
    Ok((out, diagnostics))
}

fn weather_record(rec: &csv::StringRecord, line: usize) -> Result<WeatherReading, Diagnostic> {
    if rec.len() != WEATHER_CSV_HEADER.len() {
        return Err(Diagnostic::error(
            line,
            "BAD_CSV",
            format!("expected {} columns, found {}", WEATHER_CSV_HEADER.len(), rec.len()),
        ));
    }
    let station_id = rec[0].trim();
    if station_id.is_empty() {
        return Err(Diagnostic::error(line, "MISSING_FIELD", "missing station_id"));
    }
    let timestamp = DateTime::parse_from_rfc3339(rec[1].trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Diagnostic::error(line, "BAD_TIMESTAMP", format!("timestamp {:?}: {e}", &rec[1])))?;
    let value = |i: usize, valid: fn(f64) -> bool| -> Result<Option<f64>, Diagnostic> {
        let cell = rec[i].trim();
        if cell.is_empty() {
            return Ok(None);
        }
        cell.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && valid(*v))
            .map(Some)
            .ok_or_else(|| {
                Diagnostic::error(line, "BAD_VALUE", format!("{} value {cell:?} out of range", WEATHER_CSV_HEADER[i]))
            })
    };
    Ok(WeatherReading {
        station_id: station_id.to_string(),
        timestamp,
        precip_mm: value(2, |v| v >= 0.0)?,
        wind_speed_kmh: value(3, |v| v >= 0.0)?,
        wind_dir_deg: value(4, |v| (0.0..360.0).contains(&v))?,
        temp_c: value(5, |v| (-90.0..=70.0).contains(&v))?,
    })
}

pub fn serialize_weather(readings: &[WeatherReading]) -> Vec<u8> {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(WEATHER_CSV_HEADER).expect("in-memory write");
    for r in readings {
        w.write_record([
            r.station_id.clone(),
            fmt_time(&r.timestamp),
            cell(r.precip_mm),
            cell(r.wind_speed_kmh),
            cell(r.wind_dir_deg),
            cell(r.temp_c),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CountVariant;

    fn cfg() -> Config {
        Config::default()
    }

    fn line(overrides: &[(&str, Value)]) -> String {
        let mut obj = json!({
            "report_id": "r1",
            "operation_id": "op-a",
            "reported_at": "2020-01-15T17:00:00Z",
            "occurred_on": "2020-01-15",
            "count": 3,
            "size": 2.0,
            "trigger": "natural",
            "problem_type": "storm-slab",
            "elevation": {"min_m": 1800, "max_m": 2400},
            "aspect": {"start_deg": 315, "end_deg": 45, "full_circle": false},
            "percent_observed": 40,
            "comment": "size 2 storm slabs on lee features",
        });
        for (k, v) in overrides {
            if v.is_null() {
                obj.as_object_mut().unwrap().remove(*k);
            } else {
                obj[*k] = v.clone();
            }
        }
        obj.to_string()
    }

    fn parse_one(l: &str) -> (Vec<Report>, Vec<Diagnostic>) {
        parse_reports(l.as_bytes(), ReportFormat::Jsonl, &cfg()).unwrap()
    }

    #[test]
    fn count_field_tokens() {
        let bins = OrdinalBinTable::default();
        match parse_count_field("several", &bins).unwrap() {
            AvalancheCount::Ordinal(b) => {
                assert_eq!((b.label(), b.lo(), b.hi()), ("several", 2, Some(9)))
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_count_field("0", &bins), Ok(AvalancheCount::numeric(0)));
        assert_eq!(parse_count_field(" Several ", &bins).unwrap().variant(), CountVariant::Ordinal);
        assert!(parse_count_field("a few-ish", &bins).is_err());
        assert!(parse_count_field("-3", &bins).is_err());
        assert!(parse_count_field("", &bins).is_err());
        assert!(parse_count_field("99999999999", &bins).is_err());
    }

    #[test]
    fn jsonl_record_with_several() {
        let (r, d) = parse_one(&line(&[("count", json!("several"))]));
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(r[0].count.display_text(), "several (2\u{2013}9)");
    }

    #[test]
    fn jsonl_digit_string_is_numeric() {
        let (r, _) = parse_one(&line(&[("count", json!("7"))]));
        assert_eq!(r[0].count, AvalancheCount::numeric(7));
    }

    #[test]
    fn inverted_elevation_rejected() {
        let (r, d) = parse_one(&line(&[("elevation", json!({"min_m": 2400, "max_m": 1800}))]));
        assert!(r.is_empty());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "ELEV_INVERTED");
        assert!(d[0].is_error());
    }

    #[test]
    fn missing_trigger_becomes_unspecified() {
        let (r, d) = parse_one(&line(&[("trigger", Value::Null), ("problem_type", json!(""))]));
        assert!(d.is_empty());
        assert_eq!(r[0].trigger, UNSPECIFIED);
        assert_eq!(r[0].problem_type, UNSPECIFIED);
    }

    #[test]
    fn error_codes() {
        let cases = [
            (line(&[("count", json!("lots"))]), "UNPARSEABLE_COUNT"),
            (line(&[("count", json!(-2))]), "UNPARSEABLE_COUNT"),
            (line(&[("size", json!(2.3))]), "BAD_SIZE"),
            (line(&[("trigger", json!("meteor"))]), "UNKNOWN_TRIGGER"),
            (line(&[("problem_type", json!("slush"))]), "UNKNOWN_PROBLEM_TYPE"),
            (line(&[("percent_observed", json!(101))]), "BAD_PERCENT"),
            (line(&[("reported_at", json!("yesterday"))]), "BAD_TIMESTAMP"),
            (line(&[("occurred_on", json!("2020-01-16"))]), "OCCURRED_AFTER_REPORT"),
            (line(&[("aspect", json!({"start_deg": 360, "end_deg": 10}))]), "BAD_ASPECT"),
            (line(&[("report_id", Value::Null)]), "MISSING_FIELD"),
            ("[1,2]".to_string(), "BAD_JSON"),
            ("{not json".to_string(), "BAD_JSON"),
        ];
        for (text, code) in cases {
            let (r, d) = parse_one(&text);
            assert!(r.is_empty(), "{text}");
            assert_eq!(d.len(), 1, "{text}");
            assert_eq!(d[0].code, code, "{text}");
        }
    }

    #[test]
    fn duplicate_ids_and_bookkeeping() {
        let text = [
            line(&[]),
            String::new(),
            line(&[]),
            line(&[("report_id", json!("r2")), ("size", json!(9))]),
            line(&[("report_id", json!("r3"))]),
        ]
        .join("\n");
        let (r, d) = parse_one(&text);
        assert_eq!(r.len(), 2);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].code, "DUPLICATE_REPORT_ID");
        assert_eq!(d[0].record, 3);
        assert_eq!(d[1].record, 4);
    }

    #[test]
    fn full_circle_without_bounds() {
        let (r, d) = parse_one(&line(&[("aspect", json!({"full_circle": true}))]));
        assert!(d.is_empty(), "{d:?}");
        assert!(r[0].aspect.is_full_circle());
    }

    #[test]
    fn non_utf8_is_unreadable() {
        let err = parse_reports(&[0xff, 0xfe, 0x00], ReportFormat::Jsonl, &cfg()).unwrap_err();
        assert!(matches!(err, IngestError::UnreadableInput(_)));
    }

    #[test]
    fn csv_header_and_records() {
        assert!(parse_reports(b"", ReportFormat::Csv, &cfg()).is_err());
        assert!(parse_reports(b"a,b,c\n", ReportFormat::Csv, &cfg()).is_err());
        let mut text = REPORT_CSV_HEADER.join(",");
        text.push('\n');
        text.push_str("r1,op-a,2020-01-15T17:00:00Z,2020-01-15,several,2.5,,wind-slab,1800,2400,315,45,false,40,\"cross-loaded, \"\"fresh\"\"\"\n");
        text.push_str("r2,op-a,2020-01-15T17:00:00Z,2020-01-15,4,2.5\n");
        let (r, d) = parse_reports(text.as_bytes(), ReportFormat::Csv, &cfg()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].trigger, UNSPECIFIED);
        assert_eq!(r[0].comment, "cross-loaded, \"fresh\"");
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].code.as_str(), d[0].record), ("BAD_CSV", 3));
    }

    #[test]
    fn serialize_empty() {
        assert!(serialize_reports(&[], ReportFormat::Jsonl).is_empty());
        let csv = serialize_reports(&[], ReportFormat::Csv);
        let (r, d) = parse_reports(&csv, ReportFormat::Csv, &cfg()).unwrap();
        assert!(r.is_empty() && d.is_empty());
    }

    #[test]
    fn serialized_ordinal_uses_label() {
        let (r, _) = parse_one(&line(&[("count", json!("SEVERAL"))]));
        let out = String::from_utf8(serialize_reports(&r, ReportFormat::Jsonl)).unwrap();
        assert!(out.contains(r#""count":"several""#), "{out}");
        assert!(!out.contains("5.5"));
        let csv = String::from_utf8(serialize_reports(&r, ReportFormat::Csv)).unwrap();
        assert!(csv.contains(",several,"), "{csv}");
    }

    #[test]
    fn round_trip_both_formats() {
        let text = [
            line(&[("count", json!("several"))]),
            line(&[("report_id", json!("r2")), ("comment", json!("multi\nline \"quoted\""))]),
        ]
        .join("\n");
        let (reports, _) = parse_one(&text);
        for fmt in [ReportFormat::Jsonl, ReportFormat::Csv] {
            let bytes = serialize_reports(&reports, fmt);
            let (back, d) = parse_reports(&bytes, fmt, &cfg()).unwrap();
            assert!(d.is_empty(), "{d:?}");
            assert_eq!(back, reports);
            assert_eq!(serialize_reports(&back, fmt), bytes);
        }
    }

    fn square_feature(id: Option<&str>, ring: Value) -> Value {
        let mut props = json!({"display_name": "Square"});
        if let Some(id) = id {
            props["operation_id"] = json!(id);
        }
        json!({"type": "Feature", "properties": props, "geometry": {"type": "Polygon", "coordinates": [ring]}})
    }

    fn collection(features: Vec<Value>) -> Vec<u8> {
        json!({"type": "FeatureCollection", "features": features}).to_string().into_bytes()
    }

    #[test]
    fn tenures_minimal() {
        let sq = json!([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]);
        let (t, d) = parse_tenures(&collection(vec![square_feature(Some("op-a"), sq)])).unwrap();
        assert_eq!(t.len(), 1);
        assert!(d.is_empty());
        assert_eq!(t[0].rings[0].len(), 4);
    }

    #[test]
    fn tenures_errors() {
        let sq = json!([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]);
        let (t, d) = parse_tenures(&collection(vec![square_feature(None, sq.clone())])).unwrap();
        assert!(t.is_empty());
        assert_eq!(d[0].code, "MISSING_OP_ID");

        let degenerate = json!([[0, 0], [1, 1], [0, 0]]);
        let (t, d) = parse_tenures(&collection(vec![
            square_feature(Some("a"), sq.clone()),
            square_feature(Some("b"), degenerate),
            square_feature(Some("c"), sq),
        ]))
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].code.as_str(), d[0].record), ("RING_TOO_SHORT", 2));

        assert!(parse_tenures(b"{oops").is_err());
        assert!(parse_tenures(b"[]").is_err());
    }

    #[test]
    fn tenure_round_trip() {
        let sq = json!([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]);
        let (t, _) = parse_tenures(&collection(vec![square_feature(Some("op-a"), sq)])).unwrap();
        let (back, d) = parse_tenures(&serialize_tenures(&t)).unwrap();
        assert!(d.is_empty());
        assert_eq!(back, t);
    }

    #[test]
    fn weather_parse_sort_and_missing() {
        let text = "station_id,timestamp,precip_mm,wind_speed_kmh,wind_dir_deg,temp_c
b,2020-01-15T02:00:00Z,1.5,,270,-4
a,2020-01-15T01:00:00Z,,10,,
a,2020-01-15T00:00:00Z,0,5,90,-3.5
a,2020-01-15T00:00:00Z,0,5,90,-3.5
a,not-a-time,0,5,90,-3.5
a,2020-01-15T03:00:00Z,-1,5,90,-3.5
";
        let (r, d) = parse_weather(text.as_bytes()).unwrap();
        let order: Vec<(&str, u32)> = r
            .iter()
            .map(|x| (x.station_id.as_str(), chrono::Timelike::hour(&x.timestamp)))
            .collect();
        assert_eq!(order, [("a", 0), ("a", 1), ("b", 2)]);
        assert_eq!(r[1].precip_mm, None);
        assert_eq!(r[1].wind_speed_kmh, Some(10.0));
        let codes: Vec<&str> = d.iter().map(|x| x.code.as_str()).collect();
        assert_eq!(codes.len(), 3);
        assert!(codes.contains(&"DUPLICATE_TIMESTAMP"));
        assert!(codes.contains(&"BAD_TIMESTAMP"));
        assert!(codes.contains(&"BAD_VALUE"));
        let (back, d2) = parse_weather(&serialize_weather(&r)).unwrap();
        assert!(d2.is_empty());
        assert_eq!(back, r);
    }
}
