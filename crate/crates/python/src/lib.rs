//! Python bindings. Structured results cross the boundary as plain
//! dicts and lists built from the core types' JSON form.
use std::path::PathBuf;

use chrono::{DateTime, NaiveDate, Utc};
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use snowglyph_core::config::Config as CoreConfig;
use snowglyph_core::dataset::{any_errors, Dataset as CoreDataset, IngestPayload};
use snowglyph_core::geometry::{self, Circle};
use snowglyph_core::ingest;
use snowglyph_core::selection::{annotate_highlights, tooltip_payload, SelectionAction};
use snowglyph_core::session::Session as CoreSession;
use snowglyph_core::svg::{render_svg, SvgOptions};
use snowglyph_core::synth::{self, SynthConfig};
use snowglyph_core::views::{self, ViewKind, ViewModels};
use snowglyph_core::weather;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    serde_json::from_str(&text).map_err(value_err)
}

fn parse_date(text: &str) -> PyResult<NaiveDate> {
    text.parse().map_err(value_err)
}

/// Bins, vocabularies, theme and darkness cap.
#[pyclass(frozen, skip_from_py_object, module = "snowglyph")]
#[derive(Clone, Default)]
struct Config {
    inner: CoreConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (text=None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let inner = match text {
            Some(t) => CoreConfig::parse(t).map_err(value_err)?,
            None => CoreConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_path(path: PathBuf) -> PyResult<Self> {
        CoreConfig::from_path(path).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn darkness_cap(&self) -> u32 {
        self.inner.darkness_cap
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }
}

fn config_or_default(config: Option<&Config>) -> CoreConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

/// `{"kind": "numeric", "n": n}`, or `{"kind": "ordinal", ...}` with the bin.
#[pyfunction]
#[pyo3(signature = (text, config=None))]
fn parse_count_field<'py>(py: Python<'py>, text: &str, config: Option<&Config>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config_or_default(config);
    let count = ingest::parse_count_field(text, &cfg.bins).map_err(value_err)?;
    to_py(py, &count)
}

/// Colour of a count token: `{"family", "darkness", "hex"}`.
#[pyfunction]
#[pyo3(signature = (text, config=None))]
fn count_to_color<'py>(py: Python<'py>, text: &str, config: Option<&Config>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config_or_default(config);
    let count = ingest::parse_count_field(text, &cfg.bins).map_err(value_err)?;
    let color = views::count_to_color(&count, &cfg).map_err(value_err)?;
    to_py(py, &color)
}

/// Packs circles of the given radii. Returns `(members, enclosing)` with
/// each circle as `(cx, cy, r)`.
#[pyfunction]
fn pack_circles(radii: Vec<f64>) -> PyResult<(Vec<(f64, f64, f64)>, (f64, f64, f64))> {
    if radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(PyValueError::new_err("radii must be positive and finite"));
    }
    let packed = geometry::pack_circles(&radii);
    let t = |c: &Circle| (c.cx, c.cy, c.r);
    Ok((packed.members.iter().map(t).collect(), t(&packed.enclosing)))
}

#[pyfunction]
fn min_enclosing_circle(circles: Vec<(f64, f64, f64)>) -> (f64, f64, f64) {
    let members: Vec<Circle> = circles.into_iter().map(|(x, y, r)| Circle::new(x, y, r)).collect();
    let c = geometry::min_enclosing_circle(&members);
    (c.cx, c.cy, c.r)
}

/// Centroid `(lon, lat)` of a ring of `(lon, lat)` vertices.
#[pyfunction]
fn polygon_centroid(ring: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    let ring: Vec<[f64; 2]> = ring.into_iter().map(|(x, y)| [x, y]).collect();
    let [x, y] = geometry::ring_centroid(&ring).map_err(value_err)?;
    Ok((x, y))
}

/// Reports, tenure polygons and weather readings held in memory.
#[pyclass(module = "snowglyph")]
struct Dataset {
    inner: CoreDataset,
    config: CoreConfig,
}

#[pymethods]
impl Dataset {
    #[new]
    #[pyo3(signature = (dataset_id, config=None))]
    fn new(dataset_id: &str, config: Option<&Config>) -> Self {
        Self {
            inner: CoreDataset::empty(dataset_id),
            config: config_or_default(config),
        }
    }

    /// Loads `<root>/<dataset_id>/`.
    #[staticmethod]
    #[pyo3(signature = (root, dataset_id, config=None))]
    fn load(root: PathBuf, dataset_id: &str, config: Option<&Config>) -> PyResult<Self> {
        let config = config_or_default(config);
        let (inner, _) = CoreDataset::load(&root, dataset_id, &config).map_err(value_err)?;
        Ok(Self { inner, config })
    }

    fn save(&self, root: PathBuf) -> PyResult<()> {
        self.inner.save(&root).map_err(value_err)
    }

    /// Merges file contents into the dataset. Returns
    /// `(has_errors, diagnostics by source)`.
    #[pyo3(signature = (reports_jsonl=None, reports_csv=None, tenures_geojson=None, weather_csv=None))]
    fn ingest<'py>(
        &mut self,
        py: Python<'py>,
        reports_jsonl: Option<String>,
        reports_csv: Option<String>,
        tenures_geojson: Option<String>,
        weather_csv: Option<String>,
    ) -> PyResult<(bool, Bound<'py, PyAny>)> {
        let payload = IngestPayload {
            reports_jsonl,
            reports_csv,
            tenures_geojson,
            weather_csv,
        };
        let (next, diags) = self.inner.merged(&payload, &self.config).map_err(value_err)?;
        self.inner = next;
        Ok((any_errors(&diags), to_py(py, &diags)?))
    }

    #[getter]
    fn dataset_id(&self) -> &str {
        &self.inner.dataset_id
    }

    fn report_ids(&self) -> Vec<String> {
        self.inner.reports.iter().map(|r| r.report_id.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.reports.len()
    }

    fn reports_jsonl(&self) -> PyResult<String> {
        let bytes = ingest::serialize_reports(&self.inner.reports, ingest::ReportFormat::Jsonl);
        String::from_utf8(bytes).map_err(value_err)
    }

    /// All five view models, optionally limited to an inclusive date range
    /// given as `YYYY-MM-DD` strings.
    #[pyo3(signature = (date_from=None, date_to=None, session=None))]
    fn view_models<'py>(
        &self,
        py: Python<'py>,
        date_from: Option<&str>,
        date_to: Option<&str>,
        session: Option<&Session>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let vm = self.build_views(date_from, date_to, session)?;
        to_py(py, &vm)
    }

    #[pyo3(signature = (view, width=960.0, height=480.0, date_from=None, date_to=None, session=None))]
    #[allow(clippy::too_many_arguments)]
    fn render_svg(
        &self,
        view: &str,
        width: f64,
        height: f64,
        date_from: Option<&str>,
        date_to: Option<&str>,
        session: Option<&Session>,
    ) -> PyResult<String> {
        let kind: ViewKind = view.parse().map_err(value_err)?;
        let vm = self.build_views(date_from, date_to, session)?;
        Ok(render_svg(&vm, kind, &SvgOptions { width, height }))
    }

    fn tooltip<'py>(&self, py: Python<'py>, report_id: &str) -> PyResult<Bound<'py, PyAny>> {
        let tip = tooltip_payload(report_id, &self.inner.reports)
            .map_err(|e| PyKeyError::new_err(e.0))?;
        to_py(py, &tip)
    }

    /// Regional weather summary over `(now - window_hours, now]`. `now` is
    /// an RFC 3339 timestamp and defaults to the newest reading.
    #[pyo3(signature = (window_hours=24, now=None))]
    fn weather_summary<'py>(&self, py: Python<'py>, window_hours: u32, now: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        if window_hours == 0 {
            return Err(PyValueError::new_err("window_hours must be positive"));
        }
        let now = match now {
            Some(t) => Some(t.parse::<DateTime<Utc>>().map_err(value_err)?),
            None => self.inner.weather.iter().map(|r| r.timestamp).max(),
        };
        match now {
            Some(now) => to_py(py, &weather::summarize_all(&self.inner.weather, now, window_hours)),
            None => to_py(py, &weather::regional_summary(&[]).map_err(value_err)?),
        }
    }
}

impl Dataset {
    fn build_views(&self, from: Option<&str>, to: Option<&str>, session: Option<&Session>) -> PyResult<ViewModels> {
        let range = match (from, to) {
            (Some(f), Some(t)) => Some((parse_date(f)?, parse_date(t)?)),
            (None, None) => None,
            _ => return Err(PyValueError::new_err("give both date_from and date_to or neither")),
        };
        let vm = ViewModels::build(&self.inner.reports, &self.inner.tenures, range, &self.config).map_err(value_err)?;
        Ok(match session {
            Some(s) => annotate_highlights(&vm, &s.inner.state),
            None => vm,
        })
    }
}

/// A linked selection over one dataset, with its action log.
#[pyclass(module = "snowglyph")]
struct Session {
    inner: CoreSession,
}

#[pymethods]
impl Session {
    #[new]
    fn new(session_id: &str, dataset_id: &str) -> Self {
        Self {
            inner: CoreSession::new(session_id, dataset_id),
        }
    }

    /// Applies an action, given as a dict or JSON text such as
    /// `{"type": "add", "ids": ["r1"]}`. Returns `(version, ignored)`.
    fn apply_action(&mut self, action: &Bound<'_, PyAny>, dataset: &Dataset) -> PyResult<(u64, usize)> {
        let action: SelectionAction = from_py(action)?;
        if let SelectionAction::Brush { predicate } = &action {
            predicate.validate().map_err(value_err)?;
        }
        let applied = self.inner.apply(action, &dataset.inner.reports);
        Ok((applied.state.version, applied.ignored))
    }

    #[getter]
    fn version(&self) -> u64 {
        self.inner.state.version
    }

    #[getter]
    fn selected(&self) -> Vec<String> {
        self.inner.state.selected.iter().cloned().collect()
    }

    fn log<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.log)
    }

    fn write_log(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_log(&path).map_err(value_err)
    }

    #[staticmethod]
    fn read_log(path: PathBuf, dataset: &Dataset) -> PyResult<Self> {
        CoreSession::read_log(&path, &dataset.inner.reports)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }
}

/// Builds a seeded synthetic dataset.
#[pyfunction]
#[pyo3(signature = (seed=42, dataset_id=None, days=3, operations=6, stations=5, ordinal_fraction=0.3, config=None))]
fn generate_synthetic(
    seed: u64,
    dataset_id: Option<String>,
    days: usize,
    operations: usize,
    stations: usize,
    ordinal_fraction: f64,
    config: Option<&Config>,
) -> PyResult<Dataset> {
    let config = config_or_default(config);
    let synth = SynthConfig {
        seed,
        n_days: days,
        n_operations: operations,
        n_stations: stations,
        ordinal_fraction,
        ..SynthConfig::default()
    };
    let data = synth::generate_synthetic(&synth, &config).map_err(value_err)?;
    let mut inner = CoreDataset::empty(&dataset_id.unwrap_or_else(|| format!("synth-{seed}")));
    inner.reports = data.reports;
    inner.tenures = data.tenures;
    inner.weather = data.weather;
    Ok(Dataset { inner, config })
}

#[pymodule]
fn snowglyph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Config>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(parse_count_field, m)?)?;
    m.add_function(wrap_pyfunction!(count_to_color, m)?)?;
    m.add_function(wrap_pyfunction!(pack_circles, m)?)?;
    m.add_function(wrap_pyfunction!(min_enclosing_circle, m)?)?;
    m.add_function(wrap_pyfunction!(polygon_centroid, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    let info = PyDict::new(m.py());
    info.set_item("version", env!("CARGO_PKG_VERSION"))?;
    m.add("build_info", info)?;
    Ok(())
}
