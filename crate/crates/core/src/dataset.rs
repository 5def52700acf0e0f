//! A named bundle of reports, tenures and weather, stored as a directory.
//!
//! On disk a dataset is `reports.jsonl`, `tenures.geojson` and
//! `weather.csv` under `<root>/<dataset_id>/`. Any of the three may be
//! absent.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::ingest::{
    parse_reports, parse_tenures, parse_weather, serialize_reports, serialize_tenures,
    serialize_weather, Diagnostic, IngestError, ReportFormat,
};
use crate::model::{OperationTenure, Report, WeatherReading};

pub const REPORTS_FILE: &str = "reports.jsonl";
pub const TENURES_FILE: &str = "tenures.geojson";
pub const WEATHER_FILE: &str = "weather.csv";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid dataset id {0:?}")]
    InvalidId(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Ingest { path: PathBuf, source: IngestError },
}

/// Ids are used as directory names, so they are kept to a safe alphabet.
pub fn valid_dataset_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dataset_id: String,
    pub reports: Vec<Report>,
    pub tenures: Vec<OperationTenure>,
    pub weather: Vec<WeatherReading>,
    pub loaded_at: DateTime<Utc>,
}

/// Text of the files to merge into a dataset. Reports may come as JSONL or
/// CSV; both are parsed when both are given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestPayload {
    #[serde(default)]
    pub reports_jsonl: Option<String>,
    #[serde(default)]
    pub reports_csv: Option<String>,
    #[serde(default)]
    pub tenures_geojson: Option<String>,
    #[serde(default)]
    pub weather_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDiagnostics {
    pub source: String,
    pub diagnostics: Vec<Diagnostic>,
}

impl SourceDiagnostics {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

pub fn any_errors(diags: &[SourceDiagnostics]) -> bool {
    diags.iter().any(SourceDiagnostics::has_errors)
}

impl Dataset {
    pub fn empty(dataset_id: &str) -> Self {
        Self {
            dataset_id: dataset_id.to_string(),
            reports: Vec::new(),
            tenures: Vec::new(),
            weather: Vec::new(),
            loaded_at: Utc::now(),
        }
    }

    pub fn report(&self, report_id: &str) -> Option<&Report> {
        self.reports.iter().find(|r| r.report_id == report_id)
    }

    /// Warnings for reports whose operation has no tenure polygon. Nothing
    /// is reported for a dataset with no tenures at all.
    pub fn integrity_diagnostics(&self) -> Vec<Diagnostic> {
        if self.tenures.is_empty() {
            return Vec::new();
        }
        let known: BTreeSet<&str> = self.tenures.iter().map(|t| t.operation_id.as_str()).collect();
        self.reports
            .iter()
            .enumerate()
            .filter(|(_, r)| !known.contains(r.operation_id.as_str()))
            .map(|(i, r)| {
                Diagnostic::warning(
                    i + 1,
                    "UNMAPPED_OPERATION",
                    format!("report {} names operation {:?} with no tenure", r.report_id, r.operation_id),
                )
            })
            .collect()
    }

    /// Returns a new dataset with the payload's records merged in. Records
    /// with errors are dropped; a report or tenure whose id already exists
    /// is rejected, and weather readings replace any at the same station
    /// and timestamp.
    pub fn merged(
        &self,
        payload: &IngestPayload,
        config: &Config,
    ) -> Result<(Dataset, Vec<SourceDiagnostics>), IngestError> {
        let mut next = self.clone();
        let mut out = Vec::new();
        for (source, text, format) in [
            ("reports_jsonl", &payload.reports_jsonl, ReportFormat::Jsonl),
            ("reports_csv", &payload.reports_csv, ReportFormat::Csv),
        ] {
            let Some(text) = text else { continue };
            let (reports, mut diags) = parse_reports(text.as_bytes(), format, config)?;
            next.add_reports(reports, &mut diags);
            out.push(SourceDiagnostics { source: source.into(), diagnostics: diags });
        }
        if let Some(text) = &payload.tenures_geojson {
            let (tenures, mut diags) = parse_tenures(text.as_bytes())?;
            for (i, t) in tenures.into_iter().enumerate() {
                if next.tenures.iter().any(|e| e.operation_id == t.operation_id) {
                    diags.push(Diagnostic::error(
                        i + 1,
                        "DUPLICATE_OP_ID",
                        format!("operation {:?} already has a tenure", t.operation_id),
                    ));
                } else {
                    next.tenures.push(t);
                }
            }
            out.push(SourceDiagnostics { source: "tenures_geojson".into(), diagnostics: diags });
        }
        if let Some(text) = &payload.weather_csv {
            let (readings, diags) = parse_weather(text.as_bytes())?;
            for r in readings {
                next.weather.retain(|e| !(e.station_id == r.station_id && e.timestamp == r.timestamp));
                next.weather.push(r);
            }
            next.weather
                .sort_by(|a, b| (&a.station_id, a.timestamp).cmp(&(&b.station_id, b.timestamp)));
            out.push(SourceDiagnostics { source: "weather_csv".into(), diagnostics: diags });
        }
        let integrity = next.integrity_diagnostics();
        if !integrity.is_empty() {
            out.push(SourceDiagnostics { source: "integrity".into(), diagnostics: integrity });
        }
        next.loaded_at = Utc::now();
        Ok((next, out))
    }

    fn add_reports(&mut self, reports: Vec<Report>, diags: &mut Vec<Diagnostic>) {
        let mut ids: BTreeSet<String> = self.reports.iter().map(|r| r.report_id.clone()).collect();
        for r in reports {
            if ids.insert(r.report_id.clone()) {
                self.reports.push(r);
            } else {
                diags.push(Diagnostic::error(
                    0,
                    "DUPLICATE_REPORT_ID",
                    format!("report {} is already in the dataset", r.report_id),
                ));
            }
        }
    }

    /// Loads `<root>/<dataset_id>/`. A missing directory is an empty dataset.
    pub fn load(
        root: &Path,
        dataset_id: &str,
        config: &Config,
    ) -> Result<(Dataset, Vec<SourceDiagnostics>), DatasetError> {
        if !valid_dataset_id(dataset_id) {
            return Err(DatasetError::InvalidId(dataset_id.to_string()));
        }
        let dir = root.join(dataset_id);
        let read = |name: &str| -> Result<Option<String>, DatasetError> {
            let path = dir.join(name);
            match fs::read_to_string(&path) {
                Ok(s) => Ok(Some(s)),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(DatasetError::Io { path, source }),
            }
        };
        let payload = IngestPayload {
            reports_jsonl: read(REPORTS_FILE)?,
            reports_csv: None,
            tenures_geojson: read(TENURES_FILE)?,
            weather_csv: read(WEATHER_FILE)?,
        };
        Dataset::empty(dataset_id)
            .merged(&payload, config)
            .map_err(|source| DatasetError::Ingest { path: dir, source })
    }

    /// Writes the normalized files, each through a temporary file and a rename.
    pub fn save(&self, root: &Path) -> Result<(), DatasetError> {
        if !valid_dataset_id(&self.dataset_id) {
            return Err(DatasetError::InvalidId(self.dataset_id.clone()));
        }
        let dir = root.join(&self.dataset_id);
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| DatasetError::Io { path, source }
        };
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (name, bytes) in [
            (REPORTS_FILE, serialize_reports(&self.reports, ReportFormat::Jsonl)),
            (TENURES_FILE, serialize_tenures(&self.tenures)),
            (WEATHER_FILE, serialize_weather(&self.weather)),
        ] {
            let path = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
            fs::rename(&tmp, &path).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// Dataset ids found under `root`, sorted.
    pub fn list(root: &Path) -> Result<Vec<String>, DatasetError> {
        let entries = match fs::read_dir(root) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(DatasetError::Io { path: root.to_path_buf(), source }),
        };
        let mut ids: Vec<String> = entries
            .filter_map(Result::ok)
            .filter(|e| e.file_type().map(|t| t.is_dir()).unwrap_or(false))
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|id| valid_dataset_id(id))
            .collect();
        ids.sort();
        Ok(ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SynthConfig};

    fn synth_dataset() -> Dataset {
        let d = generate_synthetic(&SynthConfig::default(), &Config::default()).unwrap();
        Dataset {
            dataset_id: "synth".into(),
            reports: d.reports,
            tenures: d.tenures,
            weather: d.weather,
            loaded_at: Utc::now(),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = std::env::temp_dir().join(format!("snowglyph-ds-{}", std::process::id()));
        let ds = synth_dataset();
        ds.save(&dir).unwrap();
        let (back, diags) = Dataset::load(&dir, "synth", &Config::default()).unwrap();
        assert!(!any_errors(&diags), "{diags:?}");
        assert_eq!(back.reports, ds.reports);
        assert_eq!(back.tenures, ds.tenures);
        assert_eq!(back.weather, ds.weather);
        assert_eq!(Dataset::list(&dir).unwrap(), vec!["synth".to_string()]);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn missing_dir_is_empty() {
        let (ds, diags) = Dataset::load(Path::new("/nonexistent-snowglyph"), "x", &Config::default()).unwrap();
        assert!(ds.reports.is_empty() && diags.is_empty());
    }

    #[test]
    fn ids_are_checked() {
        assert!(valid_dataset_id("synth-42"));
        assert!(!valid_dataset_id("../etc"));
        assert!(!valid_dataset_id(""));
        assert!(!valid_dataset_id("a/b"));
    }

    #[test]
    fn duplicate_reports_rejected_on_merge() {
        let ds = synth_dataset();
        let payload = IngestPayload {
            reports_jsonl: Some(
                String::from_utf8(serialize_reports(&ds.reports[..2], ReportFormat::Jsonl)).unwrap(),
            ),
            ..Default::default()
        };
        let (next, diags) = ds.merged(&payload, &Config::default()).unwrap();
        assert_eq!(next.reports.len(), ds.reports.len());
        assert_eq!(
            diags[0].diagnostics.iter().filter(|d| d.code == "DUPLICATE_REPORT_ID").count(),
            2
        );
    }

    #[test]
    fn unmapped_operation_warns() {
        let mut ds = synth_dataset();
        ds.reports[0].operation_id = "op-99".into();
        let diags = ds.integrity_diagnostics();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "UNMAPPED_OPERATION");
        assert!(!diags[0].is_error());
    }
}
