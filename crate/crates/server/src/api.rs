//! HTTP routes.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;

use snowglyph_core::dataset::{IngestPayload, SourceDiagnostics};
use snowglyph_core::selection::{annotate_highlights, tooltip_payload, SelectionAction, Tooltip};
use snowglyph_core::views::{ViewKind, ViewModels};
use snowglyph_core::weather::{station_detail, summarize_all, RegionalSummary};
use snowglyph_core::model::WeatherReading;

use crate::state::{AppState, SelectionEvent, StateError};

pub type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/datasets", get(list_datasets))
        .route("/api/datasets/{id}/ingest", post(ingest))
        .route("/api/datasets/{id}/viewmodels", get(viewmodels))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{sid}", get(get_session))
        .route("/api/sessions/{sid}/selection", post(apply_selection))
        .route("/api/sessions/{sid}/highlights", get(highlights))
        .route("/api/sessions/{sid}/events", get(session_events))
        .route("/api/events", get(all_events))
        .route("/api/reports/{rid}/tooltip", get(tooltip))
        .route("/api/weather/summary", get(weather_summary))
        .route("/api/weather/stations/{station}", get(weather_station))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.into(),
        }
    }

    fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

impl From<StateError> for ApiError {
    fn from(e: StateError) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            StateError::UnknownDataset(_) => (StatusCode::NOT_FOUND, "UNKNOWN_DATASET"),
            StateError::UnknownSession(_) => (StatusCode::NOT_FOUND, "UNKNOWN_SESSION"),
            StateError::SessionConflict(_) => (StatusCode::CONFLICT, "SESSION_CONFLICT"),
            StateError::InvalidId(_) => (StatusCode::BAD_REQUEST, "INVALID_ID"),
            StateError::Ingest(_) => (StatusCode::BAD_REQUEST, "UNREADABLE_INPUT"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL"),
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!("{message}");
        }
        Self { status, code, message }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request("BAD_BODY", e.body_text())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Serialize)]
struct DatasetSummary {
    dataset_id: String,
    report_count: usize,
    tenure_count: usize,
    weather_reading_count: usize,
    first_date: Option<NaiveDate>,
    last_date: Option<NaiveDate>,
    loaded_at: DateTime<Utc>,
    error_count: usize,
    warning_count: usize,
}

async fn list_datasets(State(state): State<Shared>) -> Json<Vec<DatasetSummary>> {
    let out = state
        .datasets()
        .iter()
        .map(|l| {
            let d = &l.dataset;
            let diags = l.diagnostics.iter().flat_map(|s| &s.diagnostics);
            let errors = diags.clone().filter(|d| d.is_error()).count();
            DatasetSummary {
                dataset_id: d.dataset_id.clone(),
                report_count: d.reports.len(),
                tenure_count: d.tenures.len(),
                weather_reading_count: d.weather.len(),
                first_date: d.reports.iter().map(|r| r.occurred_on).min(),
                last_date: d.reports.iter().map(|r| r.occurred_on).max(),
                loaded_at: d.loaded_at,
                error_count: errors,
                warning_count: diags.count() - errors,
            }
        })
        .collect();
    Json(out)
}

#[derive(Debug, Serialize)]
struct IngestResponse {
    dataset_id: String,
    report_count: usize,
    tenure_count: usize,
    weather_reading_count: usize,
    has_errors: bool,
    diagnostics: Vec<SourceDiagnostics>,
}

async fn ingest(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<IngestPayload>, JsonRejection>,
) -> ApiResult<IngestResponse> {
    let Json(payload) = body?;
    let (loaded, diagnostics) = state.ingest(&id, &payload).await?;
    Ok(Json(IngestResponse {
        dataset_id: id,
        report_count: loaded.dataset.reports.len(),
        tenure_count: loaded.dataset.tenures.len(),
        weather_reading_count: loaded.dataset.weather.len(),
        has_errors: snowglyph_core::dataset::any_errors(&diagnostics),
        diagnostics,
    }))
}

#[derive(Debug, Deserialize)]
struct RangeQuery {
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
}

async fn viewmodels(
    State(state): State<Shared>,
    Path(id): Path<String>,
    query: Result<Query<RangeQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request("BAD_QUERY", e.body_text()))?;
    let loaded = state.dataset(&id)?;
    let range = match (q.from, q.to) {
        (None, None) => return Ok(Json(&loaded.views).into_response()),
        (Some(f), Some(t)) if f <= t => (f, t),
        (Some(_), Some(_)) => return Err(ApiError::bad_request("BAD_RANGE", "from is after to")),
        _ => return Err(ApiError::bad_request("BAD_RANGE", "give both from and to, or neither")),
    };
    let views = ViewModels::build(&loaded.dataset.reports, &loaded.dataset.tenures, Some(range), &state.config)
        .map_err(StateError::from)?;
    Ok(Json(views).into_response())
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    dataset_id: String,
    #[serde(default)]
    session_id: Option<String>,
}

async fn create_session(
    State(state): State<Shared>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let (id, created) = state.create_session(req.session_id.as_deref(), &req.dataset_id)?;
    let session = state.session(&id).await?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    let body = json!({
        "session_id": session.session_id,
        "dataset_id": session.dataset_id,
        "version": session.state.version,
    });
    Ok((status, Json(body)).into_response())
}

#[derive(Debug, Serialize)]
struct SessionView {
    session_id: String,
    dataset_id: String,
    version: u64,
    selected: Vec<String>,
    log_length: usize,
}

async fn get_session(State(state): State<Shared>, Path(sid): Path<String>) -> ApiResult<SessionView> {
    let s = state.session(&sid).await?;
    Ok(Json(SessionView {
        version: s.state.version,
        selected: s.state.selected.iter().cloned().collect(),
        log_length: s.log.len(),
        session_id: s.session_id,
        dataset_id: s.dataset_id,
    }))
}

async fn apply_selection(
    State(state): State<Shared>,
    Path(sid): Path<String>,
    body: Result<Json<SelectionAction>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(action) = body?;
    if let SelectionAction::Brush { predicate } = &action {
        predicate
            .validate()
            .map_err(|e| ApiError::bad_request("INVALID_PREDICATE", e.to_string()))?;
    }
    let applied = state.apply(&sid, action).await?;
    Ok(Json(applied).into_response())
}

/// Highlighted report ids per view, all taken from one session snapshot.
#[derive(Debug, Serialize)]
struct Highlights {
    session_id: String,
    dataset_id: String,
    version: u64,
    selected: Vec<String>,
    views: BTreeMap<&'static str, Vec<String>>,
}

async fn highlights(State(state): State<Shared>, Path(sid): Path<String>) -> ApiResult<Highlights> {
    let s = state.session(&sid).await?;
    let loaded = state.dataset(&s.dataset_id)?;
    let annotated = annotate_highlights(&loaded.views, &s.state);
    let views = ViewKind::ALL
        .into_iter()
        .map(|v| {
            let ids: Vec<String> = annotated.highlighted_ids(v).into_iter().collect();
            (v.as_str(), ids)
        })
        .collect();
    Ok(Json(Highlights {
        session_id: s.session_id,
        dataset_id: s.dataset_id,
        version: s.state.version,
        selected: s.state.selected.into_iter().collect(),
        views,
    }))
}

fn event_stream(
    state: Shared,
    only: Option<String>,
    initial: Option<SelectionEvent>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = state.subscribe();
    let first = stream::iter(initial.map(|e| Ok(to_event(&e))));
    let rest = stream::unfold(rx, move |mut rx| {
        let only = only.clone();
        async move {
            loop {
                match rx.recv().await {
                    Ok(e) if only.as_ref().is_none_or(|s| *s == e.session_id) => {
                        return Some((Ok(to_event(&e)), rx));
                    }
                    Ok(_) => continue,
                    Err(RecvError::Lagged(n)) => {
                        let ev = Event::default().event("lagged").data(n.to_string());
                        return Some((Ok(ev), rx));
                    }
                    Err(RecvError::Closed) => return None,
                }
            }
        }
    });
    Sse::new(first.chain(rest)).keep_alive(KeepAlive::default())
}

fn to_event(e: &SelectionEvent) -> Event {
    Event::default()
        .event("selection")
        .id(e.version.to_string())
        .data(serde_json::to_string(e).expect("event serializes"))
}

/// Starts with the session's current version so a reconnecting client can
/// resync, then one event per applied action.
async fn session_events(State(state): State<Shared>, Path(sid): Path<String>) -> Result<Response, ApiError> {
    let s = state.session(&sid).await?;
    let initial = SelectionEvent {
        session_id: sid.clone(),
        version: s.state.version,
    };
    Ok(event_stream(state, Some(sid), Some(initial)).into_response())
}

async fn all_events(State(state): State<Shared>) -> Response {
    event_stream(state, None, None).into_response()
}

#[derive(Debug, Deserialize)]
struct TooltipQuery {
    dataset: Option<String>,
}

#[derive(Debug, Serialize)]
struct TooltipResponse {
    dataset_id: String,
    #[serde(flatten)]
    tooltip: Tooltip,
}

/// Looks in `?dataset=` if given, otherwise in every dataset by id order.
async fn tooltip(
    State(state): State<Shared>,
    Path(rid): Path<String>,
    Query(q): Query<TooltipQuery>,
) -> ApiResult<TooltipResponse> {
    let candidates = match q.dataset {
        Some(id) => vec![state.dataset(&id)?],
        None => state.datasets(),
    };
    for l in candidates {
        if let Ok(tooltip) = tooltip_payload(&rid, &l.dataset.reports) {
            return Ok(Json(TooltipResponse {
                dataset_id: l.dataset.dataset_id.clone(),
                tooltip,
            }));
        }
    }
    Err(ApiError::not_found("UNKNOWN_REPORT", format!("unknown report id {rid:?}")))
}

#[derive(Debug, Deserialize)]
struct WeatherQuery {
    window: Option<u32>,
    dataset: Option<String>,
    now: Option<DateTime<Utc>>,
}

struct WeatherScope {
    dataset_id: String,
    readings: Arc<crate::state::Loaded>,
    now: Option<DateTime<Utc>>,
    window: u32,
}

fn weather_scope(state: &AppState, q: WeatherQuery) -> Result<WeatherScope, ApiError> {
    let window = q.window.unwrap_or(24);
    if window == 0 {
        return Err(ApiError::bad_request("BAD_WINDOW", "window must be at least one hour"));
    }
    let loaded = match q.dataset {
        Some(id) => state.dataset(&id)?,
        None => state
            .datasets()
            .into_iter()
            .find(|l| !l.dataset.weather.is_empty())
            .ok_or_else(|| ApiError::not_found("NO_WEATHER", "no dataset has weather readings"))?,
    };
    let now = q.now.or_else(|| latest(&loaded.dataset.weather));
    Ok(WeatherScope {
        dataset_id: loaded.dataset.dataset_id.clone(),
        readings: loaded,
        now,
        window,
    })
}

fn latest(readings: &[WeatherReading]) -> Option<DateTime<Utc>> {
    readings.iter().map(|r| r.timestamp).max()
}

#[derive(Debug, Serialize)]
struct WeatherSummaryResponse {
    dataset_id: String,
    now: Option<DateTime<Utc>>,
    #[serde(flatten)]
    summary: RegionalSummary,
}

/// `now` defaults to the newest reading in the dataset.
async fn weather_summary(
    State(state): State<Shared>,
    query: Result<Query<WeatherQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<WeatherSummaryResponse> {
    let Query(q) = query.map_err(|e| ApiError::bad_request("BAD_QUERY", e.body_text()))?;
    let scope = weather_scope(&state, q)?;
    let weather = &scope.readings.dataset.weather;
    let summary = match scope.now {
        Some(now) => summarize_all(weather, now, scope.window),
        None => snowglyph_core::weather::regional_summary(&[]).expect("empty summary"),
    };
    Ok(Json(WeatherSummaryResponse {
        dataset_id: scope.dataset_id,
        now: scope.now,
        summary,
    }))
}

#[derive(Debug, Serialize)]
struct StationResponse {
    dataset_id: String,
    station_id: String,
    now: Option<DateTime<Utc>>,
    window_hours: u32,
    readings: Vec<WeatherReading>,
}

async fn weather_station(
    State(state): State<Shared>,
    Path(station): Path<String>,
    query: Result<Query<WeatherQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<StationResponse> {
    let Query(q) = query.map_err(|e| ApiError::bad_request("BAD_QUERY", e.body_text()))?;
    let scope = weather_scope(&state, q)?;
    let weather = &scope.readings.dataset.weather;
    let now = scope.now.unwrap_or_else(Utc::now);
    let readings = station_detail(&station, weather, now, scope.window)
        .map_err(|e| ApiError::not_found("UNKNOWN_STATION", e.to_string()))?;
    Ok(Json(StationResponse {
        dataset_id: scope.dataset_id,
        station_id: station,
        now: scope.now,
        window_hours: scope.window,
        readings,
    }))
}
