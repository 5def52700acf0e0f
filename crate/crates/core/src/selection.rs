//! Linked selection shared by all views, plus tooltip payloads.
//!
//! A [`SelectionState`] only changes through [`SelectionState::apply`], and
//! every applied action bumps the version by one, so a log of actions
//! replayed from [`SelectionState::default`] reproduces the state exactly.

use std::collections::{BTreeSet, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    aspect_overlaps, AspectInterval, CountVariant, DestructiveSize, Report,
};
use crate::views::ViewModels;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelectionState {
    pub selected: BTreeSet<String>,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BrushPredicate {
    DateRange { from: NaiveDate, to: NaiveDate },
    ElevationOverlap { min_m: f64, max_m: f64 },
    AspectOverlap { aspect: AspectInterval },
    MatrixCell { problem_type: String, trigger: String },
    Operation { operation_id: String },
    SizeRange { lo: DestructiveSize, hi: DestructiveSize },
    CountVariant { variant: CountVariant },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("brush range is not well ordered")]
pub struct InvalidPredicate;

impl BrushPredicate {
    /// Ranges must be well ordered; an inverted range matches nothing.
    pub fn validate(&self) -> Result<(), InvalidPredicate> {
        let ok = match self {
            BrushPredicate::DateRange { from, to } => from <= to,
            BrushPredicate::ElevationOverlap { min_m, max_m } => {
                min_m.is_finite() && max_m.is_finite() && min_m <= max_m
            }
            BrushPredicate::SizeRange { lo, hi } => lo <= hi,
            _ => true,
        };
        ok.then_some(()).ok_or(InvalidPredicate)
    }

    pub fn matches(&self, r: &Report) -> bool {
        match self {
            BrushPredicate::DateRange { from, to } => *from <= r.occurred_on && r.occurred_on <= *to,
            BrushPredicate::ElevationOverlap { min_m, max_m } => r.elevation.overlaps(*min_m, *max_m),
            BrushPredicate::AspectOverlap { aspect } => aspect_overlaps(aspect, &r.aspect),
            BrushPredicate::MatrixCell {
                problem_type,
                trigger,
            } => r.problem_type == *problem_type && r.trigger == *trigger,
            BrushPredicate::Operation { operation_id } => r.operation_id == *operation_id,
            BrushPredicate::SizeRange { lo, hi } => *lo <= r.size && r.size <= *hi,
            BrushPredicate::CountVariant { variant } => r.count.variant() == *variant,
        }
    }
}

/// Ids of the reports matching `predicate`.
pub fn match_predicate(predicate: &BrushPredicate, dataset: &[Report]) -> BTreeSet<String> {
    dataset
        .iter()
        .filter(|r| predicate.matches(r))
        .map(|r| r.report_id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SelectionAction {
    Set { ids: Vec<String> },
    Add { ids: Vec<String> },
    Remove { ids: Vec<String> },
    Clear,
    Brush { predicate: BrushPredicate },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub state: SelectionState,
    /// Ids in the action that are not in the dataset.
    pub ignored: usize,
}

impl SelectionState {
    /// Returns the next state. Unknown ids are dropped and counted.
    pub fn apply(&self, action: &SelectionAction, dataset: &[Report]) -> Applied {
        let known: HashSet<&str> = dataset.iter().map(|r| r.report_id.as_str()).collect();
        let mut ignored = 0;
        let mut filter = |ids: &[String]| -> Vec<String> {
            ids.iter()
                .filter(|id| {
                    let hit = known.contains(id.as_str());
                    ignored += usize::from(!hit);
                    hit
                })
                .cloned()
                .collect()
        };
        let selected = match action {
            SelectionAction::Set { ids } => filter(ids).into_iter().collect(),
            SelectionAction::Add { ids } => {
                let mut s = self.selected.clone();
                s.extend(filter(ids));
                s
            }
            SelectionAction::Remove { ids } => {
                let gone: HashSet<String> = filter(ids).into_iter().collect();
                self.selected.iter().filter(|id| !gone.contains(*id)).cloned().collect()
            }
            SelectionAction::Clear => BTreeSet::new(),
            SelectionAction::Brush { predicate } => match_predicate(predicate, dataset),
        };
        Applied {
            state: SelectionState {
                selected,
                version: self.version + 1,
            },
            ignored,
        }
    }

    /// Folds `log` over the initial state.
    pub fn replay<'a>(log: impl IntoIterator<Item = &'a SelectionAction>, dataset: &[Report]) -> Self {
        log.into_iter()
            .fold(SelectionState::default(), |s, a| s.apply(a, dataset).state)
    }
}

/// Copy of `views` with each mark flagged iff its report is selected.
pub fn annotate_highlights(views: &ViewModels, state: &SelectionState) -> ViewModels {
    let mut out = views.clone();
    out.for_each_flag(|id, flag| *flag = state.selected.contains(id));
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown report id {0:?}")]
pub struct UnknownReportId(pub String);

/// Everything a tooltip shows for one report. `count_display` is the count
/// as reported: the number, or the bin label with its range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tooltip {
    pub report: Report,
    pub count_display: String,
}

pub fn tooltip_payload(report_id: &str, dataset: &[Report]) -> Result<Tooltip, UnknownReportId> {
    let report = dataset
        .iter()
        .find(|r| r.report_id == report_id)
        .ok_or_else(|| UnknownReportId(report_id.to_string()))?;
    Ok(Tooltip {
        report: report.clone(),
        count_display: report.count.display_text(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::model::{AvalancheCount, ElevationInterval, OrdinalBin};
    use crate::synth::{generate_synthetic, SynthConfig};
    use crate::views::ViewKind;

    fn data() -> (Vec<Report>, Vec<crate::model::OperationTenure>) {
        let d = generate_synthetic(&SynthConfig::default(), &Config::default()).unwrap();
        (d.reports, d.tenures)
    }

    #[test]
    fn clear_empties() {
        let (reports, _) = data();
        let s = SelectionState::default()
            .apply(&SelectionAction::Set { ids: vec![reports[0].report_id.clone()] }, &reports)
            .state;
        let cleared = s.apply(&SelectionAction::Clear, &reports).state;
        assert!(cleared.selected.is_empty());
        assert_eq!(cleared.version, 2);
    }

    #[test]
    fn add_is_idempotent() {
        let (reports, _) = data();
        let add = SelectionAction::Add {
            ids: vec![reports[0].report_id.clone(), reports[1].report_id.clone()],
        };
        let once = SelectionState::default().apply(&add, &reports).state;
        let twice = once.apply(&add, &reports).state;
        assert_eq!(once.selected, twice.selected);
        assert_eq!(twice.version, 2);
    }

    #[test]
    fn remove_and_unknown_ids() {
        let (reports, _) = data();
        let ids = vec![reports[0].report_id.clone(), "nope".to_string()];
        let applied = SelectionState::default().apply(&SelectionAction::Set { ids: ids.clone() }, &reports);
        assert_eq!(applied.ignored, 1);
        assert_eq!(applied.state.selected.len(), 1);
        let removed = applied.state.apply(&SelectionAction::Remove { ids }, &reports);
        assert!(removed.state.selected.is_empty());
        assert_eq!(removed.ignored, 1);
    }

    #[test]
    fn brush_date_range_matches_scan() {
        let (reports, _) = data();
        let from = reports[0].occurred_on;
        let to = from;
        let p = BrushPredicate::DateRange { from, to };
        let s = SelectionState::default()
            .apply(&SelectionAction::Brush { predicate: p }, &reports)
            .state;
        let scan: BTreeSet<String> = reports
            .iter()
            .filter(|r| r.occurred_on >= from && r.occurred_on <= to)
            .map(|r| r.report_id.clone())
            .collect();
        assert_eq!(s.selected, scan);
    }

    #[test]
    fn predicate_examples() {
        let (mut reports, _) = data();
        reports[0].elevation = ElevationInterval::new(1800.0, 2400.0).unwrap();
        reports[0].aspect = AspectInterval::new(0.0, 90.0, false).unwrap();
        let r = &reports[0];
        assert!(BrushPredicate::ElevationOverlap { min_m: 2000.0, max_m: 2200.0 }.matches(r));
        let wrap = AspectInterval::new(315.0, 45.0, false).unwrap();
        assert!(BrushPredicate::AspectOverlap { aspect: wrap }.matches(r));
        assert!(BrushPredicate::ElevationOverlap { min_m: 3000.0, max_m: 2000.0 }.validate().is_err());
    }

    #[test]
    fn predicate_json_shape() {
        let p: BrushPredicate =
            serde_json::from_str(r#"{"kind":"date_range","from":"2020-01-14","to":"2020-01-15"}"#).unwrap();
        assert!(matches!(p, BrushPredicate::DateRange { .. }));
        let a: SelectionAction = serde_json::from_str(
            r#"{"type":"brush","predicate":{"kind":"size_range","lo":1.5,"hi":3.0}}"#,
        )
        .unwrap();
        assert!(matches!(a, SelectionAction::Brush { .. }));
        let a: SelectionAction = serde_json::from_str(r#"{"type":"clear"}"#).unwrap();
        assert_eq!(a, SelectionAction::Clear);
    }

    #[test]
    fn highlights_consistent_across_views() {
        let (reports, tenures) = data();
        let cfg = Config::default();
        let views = ViewModels::build(&reports, &tenures, None, &cfg).unwrap();
        let none = annotate_highlights(&views, &SelectionState::default());
        for v in ViewKind::ALL {
            assert!(none.highlighted_ids(v).is_empty());
        }
        let id = reports[3].report_id.clone();
        let s = SelectionState::default()
            .apply(&SelectionAction::Set { ids: vec![id.clone()] }, &reports)
            .state;
        let one = annotate_highlights(&views, &s);
        for v in ViewKind::ALL {
            let flagged: Vec<_> = one.marks(v).into_iter().filter(|(_, h)| *h).collect();
            assert_eq!(flagged, vec![(id.as_str(), true)], "{v:?}");
        }
        // clearing the flags gives the original back
        assert_eq!(annotate_highlights(&one, &SelectionState::default()), views);
    }

    #[test]
    fn tooltip_verbatim() {
        let (mut reports, _) = data();
        reports[0].comment = "size 2 storm slabs on lee features".into();
        reports[1].count = AvalancheCount::Ordinal(OrdinalBin::new("several", 2, Some(9)).unwrap());
        let t = tooltip_payload(&reports[0].report_id, &reports).unwrap();
        assert_eq!(t.report, reports[0]);
        assert!(serde_json::to_string(&t).unwrap().contains("size 2 storm slabs on lee features"));
        let t = tooltip_payload(&reports[1].report_id, &reports).unwrap();
        assert_eq!(t.count_display, "several (2\u{2013}9)");
        assert!(!serde_json::to_string(&t).unwrap().contains("5.5"));
        assert_eq!(tooltip_payload("missing", &reports), Err(UnknownReportId("missing".into())));
    }

    #[test]
    fn replay_reproduces_state() {
        let (reports, _) = data();
        let log = vec![
            SelectionAction::Add { ids: vec![reports[0].report_id.clone()] },
            SelectionAction::Brush { predicate: BrushPredicate::CountVariant { variant: CountVariant::Ordinal } },
            SelectionAction::Remove { ids: vec![reports[2].report_id.clone()] },
        ];
        let mut live = SelectionState::default();
        for a in &log {
            live = live.apply(a, &reports).state;
        }
        assert_eq!(SelectionState::replay(&log, &reports), live);
        assert_eq!(live.version, 3);
    }
}
