//! In-memory service state backed by the data directory.
//!
//! ```text
//! <data>/datasets/<dataset_id>/{reports.jsonl,tenures.geojson,weather.csv}
//! <data>/sessions/<session_id>.jsonl
//! ```
//!
//! Loaded datasets sit behind `Arc`s in a map; an ingest builds a complete
//! replacement and swaps the pointer, so readers always see one version.
//! Each session has its own async mutex, held across the log append, which
//! makes that session's actions apply and persist in arrival order.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{broadcast, Mutex};

use snowglyph_core::config::Config;
use snowglyph_core::dataset::{valid_dataset_id, Dataset, DatasetError, IngestPayload, SourceDiagnostics};
use snowglyph_core::ingest::IngestError;
use snowglyph_core::selection::SelectionAction;
use snowglyph_core::session::{append_action, valid_session_id, Session, SessionError};
use snowglyph_core::views::{ViewError, ViewModels};

pub fn datasets_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("datasets")
}

pub fn sessions_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("sessions")
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    View(#[from] ViewError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} already exists for another dataset")]
    SessionConflict(String),
    #[error("invalid id {0:?}")]
    InvalidId(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A dataset with its full-range view models computed once at load.
#[derive(Debug)]
pub struct Loaded {
    pub dataset: Dataset,
    pub views: ViewModels,
    pub diagnostics: Vec<SourceDiagnostics>,
}

impl Loaded {
    fn new(dataset: Dataset, diagnostics: Vec<SourceDiagnostics>, config: &Config) -> Result<Self, ViewError> {
        let views = ViewModels::build(&dataset.reports, &dataset.tenures, None, config)?;
        Ok(Self { dataset, views, diagnostics })
    }
}

/// Pushed to event-stream subscribers after every applied action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionEvent {
    pub session_id: String,
    pub version: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppliedAction {
    pub session_id: String,
    pub version: u64,
    pub selected_count: usize,
    pub ignored: usize,
}

struct SessionSlot {
    dataset_id: String,
    session: Mutex<Session>,
}

impl SessionSlot {
    fn new(session: Session) -> Arc<Self> {
        Arc::new(Self {
            dataset_id: session.dataset_id.clone(),
            session: Mutex::new(session),
        })
    }
}

pub struct AppState {
    pub data_dir: PathBuf,
    pub config: Config,
    datasets: RwLock<BTreeMap<String, Arc<Loaded>>>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    ingest: Mutex<()>,
    events: broadcast::Sender<SelectionEvent>,
}

impl AppState {
    /// Loads every dataset and replays every session log under `data_dir`.
    /// Brushes replay against the dataset as it is now, so reports ingested
    /// after a brush was logged can join its selection.
    pub fn open(data_dir: &Path, config: Config) -> Result<Self, StateError> {
        let mut datasets = BTreeMap::new();
        let droot = datasets_dir(data_dir);
        for id in Dataset::list(&droot)? {
            let (dataset, diagnostics) = Dataset::load(&droot, &id, &config)?;
            for d in diagnostics.iter().flat_map(|s| s.diagnostics.iter().map(move |d| (&s.source, d))) {
                tracing::warn!(dataset = %id, source = %d.0, "{}", d.1);
            }
            datasets.insert(id, Arc::new(Loaded::new(dataset, diagnostics, &config)?));
        }

        let mut sessions = HashMap::new();
        let sroot = sessions_dir(data_dir);
        if sroot.is_dir() {
            let mut paths: Vec<PathBuf> = fs::read_dir(&sroot)?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
                .collect();
            paths.sort();
            for path in paths {
                // replay needs the dataset; read the header first to find it
                let header = Session::read_log(&path, &[])?;
                let Some(loaded) = datasets.get(&header.dataset_id) else {
                    tracing::warn!(session = %header.session_id, dataset = %header.dataset_id,
                        "skipping session for a missing dataset");
                    continue;
                };
                let session = Session::read_log(&path, &loaded.dataset.reports)?;
                sessions.insert(session.session_id.clone(), SessionSlot::new(session));
            }
        }

        let (events, _) = broadcast::channel(256);
        Ok(Self {
            data_dir: data_dir.to_path_buf(),
            config,
            datasets: RwLock::new(datasets),
            sessions: RwLock::new(sessions),
            ingest: Mutex::new(()),
            events,
        })
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<Loaded>, StateError> {
        self.datasets
            .read()
            .expect("dataset map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| StateError::UnknownDataset(id.to_string()))
    }

    /// Snapshot of every loaded dataset, ordered by id.
    pub fn datasets(&self) -> Vec<Arc<Loaded>> {
        self.datasets.read().expect("dataset map lock").values().cloned().collect()
    }

    /// Merges `payload` into the dataset (creating it if needed), writes it
    /// to disk and swaps it in.
    pub async fn ingest(
        &self,
        dataset_id: &str,
        payload: &IngestPayload,
    ) -> Result<(Arc<Loaded>, Vec<SourceDiagnostics>), StateError> {
        if !valid_dataset_id(dataset_id) {
            return Err(StateError::InvalidId(dataset_id.to_string()));
        }
        let _guard = self.ingest.lock().await;
        let current = match self.dataset(dataset_id) {
            Ok(l) => l.dataset.clone(),
            Err(_) => Dataset::empty(dataset_id),
        };
        let (next, diagnostics) = current.merged(payload, &self.config)?;
        let loaded = Arc::new(Loaded::new(next, diagnostics.clone(), &self.config)?);

        let root = datasets_dir(&self.data_dir);
        let to_save = loaded.clone();
        tokio::task::spawn_blocking(move || to_save.dataset.save(&root))
            .await
            .expect("save task")?;

        self.datasets
            .write()
            .expect("dataset map lock")
            .insert(dataset_id.to_string(), loaded.clone());
        Ok((loaded, diagnostics))
    }

    fn session_handle(&self, id: &str) -> Result<Arc<SessionSlot>, StateError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| StateError::UnknownSession(id.to_string()))
    }

    /// Creates a session, or returns the existing one if it already belongs
    /// to `dataset_id`. Without an id the next free `sNNNN` is used.
    pub fn create_session(&self, session_id: Option<&str>, dataset_id: &str) -> Result<(String, bool), StateError> {
        self.dataset(dataset_id)?;
        let mut map = self.sessions.write().expect("session map lock");
        let id = match session_id {
            Some(id) if valid_session_id(id) => id.to_string(),
            Some(id) => return Err(StateError::InvalidId(id.to_string())),
            None => (map.len() + 1..)
                .map(|n| format!("s{n:04}"))
                .find(|id| !map.contains_key(id))
                .expect("a free id"),
        };
        match map.get(&id) {
            Some(slot) if slot.dataset_id == dataset_id => Ok((id, false)),
            Some(_) => Err(StateError::SessionConflict(id)),
            None => {
                map.insert(id.clone(), SessionSlot::new(Session::new(&id, dataset_id)));
                Ok((id, true))
            }
        }
    }

    pub async fn session(&self, id: &str) -> Result<Session, StateError> {
        let slot = self.session_handle(id)?;
        let s = slot.session.lock().await;
        Ok(s.clone())
    }

    /// Applies `action`, appends it to the session log, then notifies
    /// subscribers. The session stays locked until the log line is written.
    pub async fn apply(&self, session_id: &str, action: SelectionAction) -> Result<AppliedAction, StateError> {
        let slot = self.session_handle(session_id)?;
        let mut session = slot.session.lock().await;
        let loaded = self.dataset(&session.dataset_id)?;

        let dir = sessions_dir(&self.data_dir);
        let path = dir.join(format!("{session_id}.jsonl"));
        let (sid, did, logged) = (session.session_id.clone(), session.dataset_id.clone(), action.clone());
        tokio::task::spawn_blocking(move || -> Result<(), SessionError> {
            fs::create_dir_all(&dir)?;
            append_action(&path, &sid, &did, &logged)
        })
        .await
        .expect("log task")?;

        let applied = session.apply(action, &loaded.dataset.reports);
        let out = AppliedAction {
            session_id: session_id.to_string(),
            version: applied.state.version,
            selected_count: applied.state.selected.len(),
            ignored: applied.ignored,
        };
        let _ = self.events.send(SelectionEvent {
            session_id: session_id.to_string(),
            version: out.version,
        });
        Ok(out)
    }

    pub fn subscribe(&self) -> broadcast::Receiver<SelectionEvent> {
        self.events.subscribe()
    }
}
