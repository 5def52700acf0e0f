//! The work behind each CLI verb. Each returns whether error diagnostics
//! were produced; `main` maps that to the exit code.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use chrono::NaiveDate;

use snowglyph_core::config::Config;
use snowglyph_core::dataset::{valid_dataset_id, Dataset, IngestPayload};
use snowglyph_core::ingest::{Diagnostic, REPORT_CSV_HEADER};
use snowglyph_core::selection::annotate_highlights;
use snowglyph_core::session::Session;
use snowglyph_core::svg::{render_svg, SvgOptions};
use snowglyph_core::synth::{generate_synthetic, SynthConfig};
use snowglyph_core::views::{ViewKind, ViewModels};

use crate::state::{datasets_dir, sessions_dir, AppState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    ReportsJsonl,
    ReportsCsv,
    Tenures,
    Weather,
}

/// Decides what a file holds from its extension, and for CSV from its
/// first header column.
pub fn classify(path: &Path, text: &str) -> Option<FileKind> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "jsonl" | "ndjson" => Some(FileKind::ReportsJsonl),
        "geojson" | "json" => Some(FileKind::Tenures),
        "csv" => {
            let first = text.lines().next().unwrap_or("").split(',').next().unwrap_or("");
            let first = first.trim().trim_start_matches('\u{feff}').trim_matches('"');
            if first == REPORT_CSV_HEADER[0] {
                Some(FileKind::ReportsCsv)
            } else {
                Some(FileKind::Weather)
            }
        }
        _ => None,
    }
}

fn payload_for(kind: FileKind, text: String) -> IngestPayload {
    let mut p = IngestPayload::default();
    match kind {
        FileKind::ReportsJsonl => p.reports_jsonl = Some(text),
        FileKind::ReportsCsv => p.reports_csv = Some(text),
        FileKind::Tenures => p.tenures_geojson = Some(text),
        FileKind::Weather => p.weather_csv = Some(text),
    }
    p
}

/// Diagnostics labelled with the file they came from.
pub type Labelled = Vec<(String, Diagnostic)>;

/// Merges `files` into `base` one at a time. Referential checks run once at
/// the end, over the merged result.
pub fn merge_files(base: Dataset, files: &[PathBuf], config: &Config) -> (Dataset, Labelled) {
    let mut ds = base;
    let mut out = Vec::new();
    for path in files {
        let label = path.display().to_string();
        let text = match fs::read(path) {
            Ok(b) => String::from_utf8_lossy(&b).into_owned(),
            Err(e) => {
                out.push((label, Diagnostic::error(0, "UNREADABLE_FILE", e.to_string())));
                continue;
            }
        };
        let Some(kind) = classify(path, &text) else {
            out.push((label, Diagnostic::error(0, "UNKNOWN_FILE_TYPE", "expected .jsonl, .csv or .geojson")));
            continue;
        };
        match ds.merged(&payload_for(kind, text), config) {
            Ok((next, diags)) => {
                ds = next;
                for s in diags.into_iter().filter(|s| s.source != "integrity") {
                    out.extend(s.diagnostics.into_iter().map(|d| (label.clone(), d)));
                }
            }
            Err(e) => out.push((label, Diagnostic::error(0, "UNREADABLE_INPUT", e.to_string()))),
        }
    }
    out.extend(ds.integrity_diagnostics().into_iter().map(|d| ("<dataset>".to_string(), d)));
    (ds, out)
}

fn report(diags: &Labelled) -> bool {
    let mut err = std::io::stderr().lock();
    for (label, d) in diags {
        let _ = writeln!(err, "{label}: {d}");
    }
    diags.iter().any(|(_, d)| d.is_error())
}

pub fn validate(files: &[PathBuf], config: &Config) -> bool {
    let (_, diags) = merge_files(Dataset::empty("validate"), files, config);
    report(&diags)
}

pub fn ingest(files: &[PathBuf], dataset_id: &str, data_dir: &Path, config: &Config) -> anyhow::Result<bool> {
    if !valid_dataset_id(dataset_id) {
        bail!("invalid dataset id {dataset_id:?}");
    }
    let root = datasets_dir(data_dir);
    let (base, load_diags) = Dataset::load(&root, dataset_id, config)?;
    if snowglyph_core::dataset::any_errors(&load_diags) {
        bail!("stored dataset {dataset_id:?} has errors; fix it before ingesting more");
    }
    let (ds, diags) = merge_files(base, files, config);
    let failed = report(&diags);
    ds.save(&root)?;
    println!(
        "{dataset_id}: {} reports, {} tenures, {} weather readings",
        ds.reports.len(),
        ds.tenures.len(),
        ds.weather.len()
    );
    Ok(failed)
}

/// Writes a synthetic dataset under `<out>/datasets/<id>`; returns its path.
pub fn synth(synth: &SynthConfig, dataset_id: Option<&str>, out: &Path, config: &Config) -> anyhow::Result<PathBuf> {
    let data = generate_synthetic(synth, config)?;
    let id = dataset_id.map_or_else(|| format!("synth-{}", synth.seed), str::to_string);
    if !valid_dataset_id(&id) {
        bail!("invalid dataset id {id:?}");
    }
    let mut ds = Dataset::empty(&id);
    ds.reports = data.reports;
    ds.tenures = data.tenures;
    ds.weather = data.weather;
    let root = datasets_dir(out);
    ds.save(&root)?;
    Ok(root.join(id))
}

pub struct RenderArgs<'a> {
    pub data_dir: &'a Path,
    pub dataset_id: &'a str,
    pub view: ViewKind,
    pub out: &'a Path,
    pub range: Option<(NaiveDate, NaiveDate)>,
    pub session_id: Option<&'a str>,
    pub options: SvgOptions,
}

pub fn render(args: &RenderArgs, config: &Config) -> anyhow::Result<bool> {
    let root = datasets_dir(args.data_dir);
    if !root.join(args.dataset_id).is_dir() {
        bail!("no dataset {:?} under {}", args.dataset_id, root.display());
    }
    let (ds, diags) = Dataset::load(&root, args.dataset_id, config)?;
    let labelled: Labelled = diags
        .into_iter()
        .flat_map(|s| {
            let label = s.source;
            s.diagnostics.into_iter().map(move |d| (label.clone(), d))
        })
        .collect();
    let failed = report(&labelled);
    let mut views = ViewModels::build(&ds.reports, &ds.tenures, args.range, config)?;
    if let Some(sid) = args.session_id {
        let path = sessions_dir(args.data_dir).join(format!("{sid}.jsonl"));
        let session = Session::read_log(&path, &ds.reports)
            .with_context(|| format!("reading session {sid:?}"))?;
        views = annotate_highlights(&views, &session.state);
    }
    let svg = render_svg(&views, args.view, &args.options);
    fs::write(args.out, svg).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(failed)
}

pub async fn serve(addr: SocketAddr, data_dir: &Path, config: Config) -> anyhow::Result<()> {
    let state = AppState::open(data_dir, config)
        .with_context(|| format!("loading data from {}", data_dir.display()))?;
    let n = state.datasets().len();
    let app = crate::api::router(Arc::new(state));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    let local = listener.local_addr()?;
    println!("listening on http://{local} ({n} datasets)");
    std::io::stdout().flush()?;
    tracing::info!(%local, datasets = n, "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_by_extension_and_header() {
        let p = Path::new;
        assert_eq!(classify(p("a.jsonl"), ""), Some(FileKind::ReportsJsonl));
        assert_eq!(classify(p("a.geojson"), ""), Some(FileKind::Tenures));
        assert_eq!(classify(p("a.csv"), "report_id,operation_id\n"), Some(FileKind::ReportsCsv));
        assert_eq!(classify(p("a.csv"), "station_id,timestamp\n"), Some(FileKind::Weather));
        assert_eq!(classify(p("a.txt"), ""), None);
        assert_eq!(classify(p("noext"), ""), None);
    }
}
