//! Event-sourced selection sessions.
//!
//! A session log is a JSONL file: the first line is a header naming the
//! session and its dataset, every later line is one applied
//! [`SelectionAction`]. The state is never stored; it is the replay of the log.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Report;
use crate::selection::{Applied, SelectionAction, SelectionState};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session log io: {0}")]
    Io(#[from] io::Error),
    #[error("session log line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("invalid session id {0:?}")]
    InvalidId(String),
}

pub fn valid_session_id(id: &str) -> bool {
    crate::dataset::valid_dataset_id(id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    session_id: String,
    dataset_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub session_id: String,
    pub dataset_id: String,
    pub state: SelectionState,
    pub log: Vec<SelectionAction>,
}

impl Session {
    pub fn new(session_id: &str, dataset_id: &str) -> Self {
        Self {
            session_id: session_id.to_string(),
            dataset_id: dataset_id.to_string(),
            state: SelectionState::default(),
            log: Vec::new(),
        }
    }

    pub fn apply(&mut self, action: SelectionAction, dataset: &[Report]) -> Applied {
        let applied = self.state.apply(&action, dataset);
        self.state = applied.state.clone();
        self.log.push(action);
        applied
    }

    pub fn replayed(&self, dataset: &[Report]) -> SelectionState {
        SelectionState::replay(&self.log, dataset)
    }

    /// Writes the whole log, replacing any file at `path`.
    pub fn write_log(&self, path: &Path) -> Result<(), SessionError> {
        let mut text = header_line(&self.session_id, &self.dataset_id);
        for a in &self.log {
            text.push_str(&action_line(a));
        }
        fs::write(path, text)?;
        Ok(())
    }

    /// Reads a log and replays it against `dataset`.
    pub fn read_log(path: &Path, dataset: &[Report]) -> Result<Self, SessionError> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(SessionError::Corrupt {
            line: 1,
            message: "empty log".into(),
        })?;
        let header: Header = serde_json::from_str(first).map_err(|e| SessionError::Corrupt {
            line: 1,
            message: e.to_string(),
        })?;
        let mut log = Vec::new();
        for (i, line) in lines {
            log.push(serde_json::from_str(line).map_err(|e| SessionError::Corrupt {
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        let state = SelectionState::replay(&log, dataset);
        Ok(Self {
            session_id: header.session_id,
            dataset_id: header.dataset_id,
            state,
            log,
        })
    }
}

fn header_line(session_id: &str, dataset_id: &str) -> String {
    let h = Header {
        session_id: session_id.to_string(),
        dataset_id: dataset_id.to_string(),
    };
    serde_json::to_string(&h).expect("header serializes") + "\n"
}

fn action_line(action: &SelectionAction) -> String {
    serde_json::to_string(action).expect("actions serialize") + "\n"
}

/// Appends one action to the log at `path`, writing the header first if the
/// file is new.
pub fn append_action(
    path: &Path,
    session_id: &str,
    dataset_id: &str,
    action: &SelectionAction,
) -> Result<(), SessionError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = String::new();
    if f.metadata()?.len() == 0 {
        buf.push_str(&header_line(session_id, dataset_id));
    }
    buf.push_str(&action_line(action));
    f.write_all(buf.as_bytes())?;
    f.sync_data()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::selection::BrushPredicate;
    use crate::synth::{generate_synthetic, SynthConfig};
    use crate::model::CountVariant;

    #[test]
    fn log_replays_to_state() {
        let reports = generate_synthetic(&SynthConfig::default(), &Config::default()).unwrap().reports;
        let dir = std::env::temp_dir().join(format!("snowglyph-sess-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s1.jsonl");
        let _ = fs::remove_file(&path);

        let mut s = Session::new("s1", "synth");
        let actions = vec![
            SelectionAction::Set { ids: vec![reports[0].report_id.clone(), "ghost".into()] },
            SelectionAction::Brush { predicate: BrushPredicate::CountVariant { variant: CountVariant::Ordinal } },
            SelectionAction::Remove { ids: vec![reports[1].report_id.clone()] },
        ];
        for a in actions {
            append_action(&path, "s1", "synth", &a).unwrap();
            s.apply(a, &reports);
        }
        assert_eq!(s.state.version, 3);
        assert_eq!(s.replayed(&reports), s.state);

        let back = Session::read_log(&path, &reports).unwrap();
        assert_eq!(back, s);

        let copy = dir.join("copy.jsonl");
        s.write_log(&copy).unwrap();
        assert_eq!(fs::read(&copy).unwrap(), fs::read(&path).unwrap());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = std::env::temp_dir().join(format!("snowglyph-sess-bad-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.jsonl");
        fs::write(&path, "{\"session_id\":\"a\",\"dataset_id\":\"b\"}\n{\"type\":\"clear\"}\nnot json\n").unwrap();
        match Session::read_log(&path, &[]) {
            Err(SessionError::Corrupt { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        fs::remove_dir_all(&dir).unwrap();
    }
}
