//! Replay review decisions from a file, for fixtures and dry runs.

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{AssignmentState, LabelError, ReviewRound, WorkflowStore};
use crate::Label;

/// What the reviewers of one record decide.
///
/// The first primary reviewer (by annotator id) gives `label`, the second
/// gives `dissent_label` when set and `label` otherwise. If that leaves a
/// disagreement, the first eligible annotator (by id) breaks the tie with
/// `tiebreak_label`, defaulting to `label`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedDecision {
    pub record_id: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissent_label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiebreak_label: Option<Label>,
}

impl ScriptedDecision {
    pub fn agreed(record_id: impl Into<String>, label: Label) -> Self {
        ScriptedDecision { record_id: record_id.into(), label, dissent_label: None, tiebreak_label: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptOutcome {
    pub reviews: usize,
    pub tiebreaks: usize,
    /// Records with pending assignments but no decision in the script.
    pub unscripted: Vec<String>,
}

pub fn apply_scripted_reviews(
    store: &WorkflowStore,
    decisions: &[ScriptedDecision],
    at: DateTime<Utc>,
) -> Result<ScriptOutcome, LabelError> {
    let by_record: HashMap<&str, &ScriptedDecision> = decisions.iter().map(|d| (d.record_id.as_str(), d)).collect();
    let mut outcome = ScriptOutcome::default();

    let pending: BTreeMap<String, Vec<(String, String)>> = store.read(|s| {
        let mut m: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        for a in s.assignments().iter().filter(|a| a.round == ReviewRound::Primary) {
            m.entry(a.record_id.clone()).or_default().push((a.annotator_id.clone(), a.id.clone()));
        }
        m.retain(|_, v| v.iter().any(|(_, id)| s.assignment(id).is_some_and(|a| a.state == AssignmentState::Pending)));
        m
    });
    for (record_id, mut reviewers) in pending {
        let Some(d) = by_record.get(record_id.as_str()) else {
            outcome.unscripted.push(record_id);
            continue;
        };
        reviewers.sort();
        for (i, (_, assignment_id)) in reviewers.iter().enumerate() {
            let label = if i == 0 { d.label } else { d.dissent_label.unwrap_or(d.label) };
            store.record_review(assignment_id, label, None, at)?;
            outcome.reviews += 1;
        }
    }

    let cases: Vec<(String, String)> = store.read(|s| {
        let mut ids: Vec<&str> = s.annotators().map(|a| a.id.as_str()).collect();
        ids.sort_unstable();
        let mut taken = HashSet::new();
        let mut out = Vec::new();
        for id in ids {
            for case in s.disagreements(Some(id)) {
                if taken.insert(case.record.id.clone()) {
                    out.push((case.record.id, id.to_string()));
                }
            }
        }
        out
    });
    for (record_id, annotator_id) in cases {
        let Some(d) = by_record.get(record_id.as_str()) else { continue };
        store.submit_tiebreak(&record_id, &annotator_id, d.tiebreak_label.unwrap_or(d.label), None, at)?;
        outcome.tiebreaks += 1;
    }
    Ok(outcome)
}
