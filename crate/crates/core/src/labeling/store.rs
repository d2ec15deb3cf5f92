use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    adjudicate, assign_reviews, assignment_id, cohen_kappa, AdjudicatedLabel, AgreementReport, AgreementSummary,
    LabelError, LabelSuggestion, PairAgreement, ReviewVote,
};
use crate::ingest::ConsolidatedRecord;
use crate::{jsonl, Label};

pub const JOURNAL_FILE: &str = "workflow.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotatorRole {
    MlScientist,
    DataScientist,
    Linguist,
    Student,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotator {
    pub id: String,
    pub display_name: String,
    pub role: AnnotatorRole,
}

impl Annotator {
    pub fn new(id: impl Into<String>, display_name: impl Into<String>, role: AnnotatorRole) -> Self {
        Annotator { id: id.into(), display_name: display_name.into(), role }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewRound {
    /// One of the two independent first-round reviews.
    Primary,
    /// Third review that breaks a first-round disagreement.
    Tiebreak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentState {
    Pending,
    Submitted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub id: String,
    pub record_id: String,
    pub annotator_id: String,
    pub round: ReviewRound,
    pub state: AssignmentState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub assignment_id: String,
    pub record_id: String,
    pub annotator_id: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub submitted_at: DateTime<Utc>,
}

/// Audit entry for an explicit correction of a stored review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supersession {
    pub assignment_id: String,
    pub previous_label: Label,
    pub new_label: Label,
    pub reason: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ReviewOutcome {
    Stored { review: Review },
    /// Identical resubmission; nothing changed.
    Unchanged { review: Review },
}

impl ReviewOutcome {
    pub fn review(&self) -> &Review {
        match self {
            ReviewOutcome::Stored { review } | ReviewOutcome::Unchanged { review } => review,
        }
    }
}

/// A first-round disagreement as shown to an eligible third reviewer. The
/// prior labels are anonymous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementCase {
    pub record: ConsolidatedRecord,
    pub prior_labels: [Label; 2],
}

/// A pending assignment joined with its record and any LLM suggestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub assignment: Assignment,
    pub record: ConsolidatedRecord,
    pub suggestion: Option<LabelSuggestion>,
}

/// One line of the append-only journal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WorkflowEvent {
    RecordsAdded { records: Vec<ConsolidatedRecord> },
    AnnotatorsRegistered { annotators: Vec<Annotator> },
    SuggestionRecorded { suggestion: LabelSuggestion },
    AssignmentsCreated { assignments: Vec<Assignment> },
    ReviewRecorded { review: Review },
    ReviewSuperseded { supersession: Supersession },
    SuggestionVisibilitySet { visible: bool },
}

/// In-memory view of the workflow, rebuilt by replaying events.
#[derive(Debug, Clone, Default)]
pub struct WorkflowState {
    records: Vec<ConsolidatedRecord>,
    record_index: HashMap<String, usize>,
    annotators: BTreeMap<String, Annotator>,
    suggestions: HashMap<String, LabelSuggestion>,
    assignments: Vec<Assignment>,
    assignment_index: HashMap<String, usize>,
    by_record: HashMap<String, Vec<usize>>,
    reviews: HashMap<String, Review>,
    supersessions: Vec<Supersession>,
    suggestions_visible: bool,
}

impl WorkflowState {
    fn apply(&mut self, event: WorkflowEvent) {
        match event {
            WorkflowEvent::RecordsAdded { records } => {
                for r in records {
                    if !self.record_index.contains_key(&r.id) {
                        self.record_index.insert(r.id.clone(), self.records.len());
                        self.records.push(r);
                    }
                }
            }
            WorkflowEvent::AnnotatorsRegistered { annotators } => {
                for a in annotators {
                    self.annotators.insert(a.id.clone(), a);
                }
            }
            WorkflowEvent::SuggestionRecorded { suggestion } => {
                self.suggestions.insert(suggestion.record_id.clone(), suggestion);
            }
            WorkflowEvent::AssignmentsCreated { assignments } => {
                for a in assignments {
                    if self.assignment_index.contains_key(&a.id) {
                        continue;
                    }
                    let idx = self.assignments.len();
                    self.assignment_index.insert(a.id.clone(), idx);
                    self.by_record.entry(a.record_id.clone()).or_default().push(idx);
                    self.assignments.push(a);
                }
            }
            WorkflowEvent::ReviewRecorded { review } => {
                if let Some(&idx) = self.assignment_index.get(&review.assignment_id) {
                    self.assignments[idx].state = AssignmentState::Submitted;
                }
                self.reviews.insert(review.assignment_id.clone(), review);
            }
            WorkflowEvent::ReviewSuperseded { supersession } => {
                if let Some(r) = self.reviews.get_mut(&supersession.assignment_id) {
                    r.label = supersession.new_label;
                }
                self.supersessions.push(supersession);
            }
            WorkflowEvent::SuggestionVisibilitySet { visible } => self.suggestions_visible = visible,
        }
    }

    pub fn records(&self) -> &[ConsolidatedRecord] {
        &self.records
    }

    pub fn record(&self, id: &str) -> Option<&ConsolidatedRecord> {
        self.record_index.get(id).map(|&i| &self.records[i])
    }

    pub fn annotators(&self) -> impl Iterator<Item = &Annotator> {
        self.annotators.values()
    }

    pub fn annotator(&self, id: &str) -> Option<&Annotator> {
        self.annotators.get(id)
    }

    pub fn suggestion(&self, record_id: &str) -> Option<&LabelSuggestion> {
        self.suggestions.get(record_id)
    }

    pub fn suggestions_visible(&self) -> bool {
        self.suggestions_visible
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn assignment(&self, id: &str) -> Option<&Assignment> {
        self.assignment_index.get(id).map(|&i| &self.assignments[i])
    }

    pub fn review(&self, assignment_id: &str) -> Option<&Review> {
        self.reviews.get(assignment_id)
    }

    pub fn reviews(&self) -> impl Iterator<Item = &Review> {
        self.assignments.iter().filter_map(|a| self.reviews.get(&a.id))
    }

    pub fn supersessions(&self) -> &[Supersession] {
        &self.supersessions
    }

    fn record_assignments(&self, record_id: &str, round: ReviewRound) -> impl Iterator<Item = &Assignment> {
        self.by_record
            .get(record_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.assignments[i])
            .filter(move |a| a.round == round)
    }

    /// Submitted reviews for a record: primaries in assignment order, then
    /// the tie-break if any.
    fn votes(&self, record_id: &str) -> (Vec<&Review>, Option<&Review>) {
        let primaries = self.record_assignments(record_id, ReviewRound::Primary).filter_map(|a| self.reviews.get(&a.id)).collect();
        let third = self.record_assignments(record_id, ReviewRound::Tiebreak).find_map(|a| self.reviews.get(&a.id));
        (primaries, third)
    }

    /// Current adjudication of a record, `None` until both first-round
    /// reviews are in.
    pub fn adjudication(&self, record_id: &str) -> Result<Option<AdjudicatedLabel>, LabelError> {
        let (primaries, third) = self.votes(record_id);
        if primaries.len() < 2 {
            return Ok(None);
        }
        let mut votes: Vec<ReviewVote> =
            primaries.iter().take(2).map(|r| ReviewVote::new(r.annotator_id.clone(), r.label)).collect();
        if let Some(t) = third.filter(|_| votes[0].label != votes[1].label) {
            votes.push(ReviewVote::new(t.annotator_id.clone(), t.label));
        }
        adjudicate(record_id, &votes).map(Some)
    }

    /// Adjudications for every record with both first-round reviews, in
    /// record order.
    pub fn adjudications(&self) -> Result<Vec<AdjudicatedLabel>, LabelError> {
        let mut out = Vec::new();
        for r in &self.records {
            if let Some(a) = self.adjudication(&r.id)? {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// Pending assignments of one annotator, oldest first.
    pub fn queue(&self, annotator_id: &str) -> Vec<QueueEntry> {
        self.assignments
            .iter()
            .filter(|a| a.annotator_id == annotator_id && a.state == AssignmentState::Pending)
            .filter_map(|a| {
                Some(QueueEntry {
                    assignment: a.clone(),
                    record: self.record(&a.record_id)?.clone(),
                    suggestion: self.suggestions.get(&a.record_id).cloned(),
                })
            })
            .collect()
    }

    fn open_disagreement(&self, record_id: &str) -> Option<[&Review; 2]> {
        let (primaries, third) = self.votes(record_id);
        match primaries.as_slice() {
            [a, b] if a.label != b.label && third.is_none() => Some([*a, *b]),
            _ => None,
        }
    }

    /// Unresolved first-round disagreements. With `eligible_for`, cases where
    /// that annotator was one of the first two reviewers are hidden.
    pub fn disagreements(&self, eligible_for: Option<&str>) -> Vec<DisagreementCase> {
        self.records
            .iter()
            .filter_map(|rec| {
                let [a, b] = self.open_disagreement(&rec.id)?;
                if eligible_for.is_some_and(|id| id == a.annotator_id || id == b.annotator_id) {
                    return None;
                }
                Some(DisagreementCase { record: rec.clone(), prior_labels: [a.label, b.label] })
            })
            .collect()
    }

    /// Pairwise and pooled kappa over double-reviewed records. Within a pair,
    /// and for the pooled figure, rater A is the lexicographically smaller id.
    pub fn agreement(&self) -> AgreementSummary {
        let mut pairs: BTreeMap<(String, String), (Vec<Label>, Vec<Label>)> = BTreeMap::new();
        let mut pooled = (Vec::new(), Vec::new());
        let mut unresolved = 0;
        for rec in &self.records {
            let (primaries, third) = self.votes(&rec.id);
            let [x, y] = match primaries.as_slice() {
                [x, y] => [*x, *y],
                _ => continue,
            };
            let (a, b) = if x.annotator_id <= y.annotator_id { (x, y) } else { (y, x) };
            let entry = pairs.entry((a.annotator_id.clone(), b.annotator_id.clone())).or_default();
            entry.0.push(a.label);
            entry.1.push(b.label);
            pooled.0.push(a.label);
            pooled.1.push(b.label);
            if a.label != b.label && third.is_none() {
                unresolved += 1;
            }
        }
        let pairs = pairs
            .into_iter()
            .map(|(key, (la, lb))| {
                let report = cohen_kappa(&la, &lb).ok().map(|r| AgreementReport { pair: Some(key.clone()), ..r });
                PairAgreement { annotators: key, n_items: la.len(), report }
            })
            .collect();
        let double_reviewed = pooled.0.len();
        let pooled = if double_reviewed == 0 { None } else { cohen_kappa(&pooled.0, &pooled.1).ok() };
        AgreementSummary { pairs, pooled, double_reviewed, unresolved_disagreements: unresolved }
    }
}

struct Inner {
    state: WorkflowState,
    journal: Option<File>,
}

/// Serialized-write workflow store backed by an append-only JSON-Lines
/// journal. Each mutation validates against the current state, is appended
/// to the journal, then applied, all under one write lock.
pub struct WorkflowStore {
    inner: RwLock<Inner>,
    path: Option<PathBuf>,
}

impl WorkflowStore {
    pub fn in_memory() -> Self {
        WorkflowStore { inner: RwLock::new(Inner { state: WorkflowState::default(), journal: None }), path: None }
    }

    /// Open (or create) the store in `dir`, replaying its journal.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, LabelError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let path = dir.join(JOURNAL_FILE);
        let mut state = WorkflowState::default();
        if path.exists() {
            for event in jsonl::read::<WorkflowEvent>(&path)? {
                state.apply(event);
            }
        }
        let journal = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(WorkflowStore { inner: RwLock::new(Inner { state, journal: Some(journal) }), path: Some(path) })
    }

    pub fn journal_path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Run `f` against a consistent snapshot of the state.
    pub fn read<R>(&self, f: impl FnOnce(&WorkflowState) -> R) -> R {
        let guard = self.inner.read().unwrap_or_else(|e| e.into_inner());
        f(&guard.state)
    }

    pub fn snapshot(&self) -> WorkflowState {
        self.read(Clone::clone)
    }

    fn write<R>(
        &self,
        f: impl FnOnce(&WorkflowState) -> Result<(Vec<WorkflowEvent>, R), LabelError>,
    ) -> Result<R, LabelError> {
        let mut guard = self.inner.write().unwrap_or_else(|e| e.into_inner());
        let (events, out) = f(&guard.state)?;
        let inner = &mut *guard;
        for event in events {
            if let Some(file) = inner.journal.as_mut() {
                jsonl::append(file, &event)?;
            }
            inner.state.apply(event);
        }
        if let Some(file) = inner.journal.as_mut() {
            file.sync_data()?;
        }
        Ok(out)
    }

    /// Add records not already present; returns how many were new.
    pub fn add_records(&self, records: Vec<ConsolidatedRecord>) -> Result<usize, LabelError> {
        self.write(|s| {
            let mut seen = HashSet::new();
            let fresh: Vec<_> =
                records.into_iter().filter(|r| s.record(&r.id).is_none() && seen.insert(r.id.clone())).collect();
            let n = fresh.len();
            let events = if n == 0 { vec![] } else { vec![WorkflowEvent::RecordsAdded { records: fresh }] };
            Ok((events, n))
        })
    }

    /// Register annotators. Re-registering an identical annotator is a
    /// no-op; reusing an id with different details is an integrity error.
    pub fn register_annotators(&self, annotators: Vec<Annotator>) -> Result<usize, LabelError> {
        self.write(|s| {
            let mut fresh: Vec<Annotator> = Vec::new();
            for a in annotators {
                if a.id.trim().is_empty() {
                    return Err(LabelError::Input("annotator id is empty".into()));
                }
                match s.annotator(&a.id).or_else(|| fresh.iter().find(|f| f.id == a.id)) {
                    Some(existing) if *existing == a => {}
                    Some(_) => return Err(LabelError::Integrity(format!("annotator id {} is already taken", a.id))),
                    None => fresh.push(a),
                }
            }
            let n = fresh.len();
            let events = if n == 0 { vec![] } else { vec![WorkflowEvent::AnnotatorsRegistered { annotators: fresh }] };
            Ok((events, n))
        })
    }

    pub fn record_suggestion(&self, suggestion: LabelSuggestion) -> Result<(), LabelError> {
        self.write(|s| {
            if s.record(&suggestion.record_id).is_none() {
                return Err(LabelError::NotFound(format!("record {}", suggestion.record_id)));
            }
            Ok((vec![WorkflowEvent::SuggestionRecorded { suggestion }], ()))
        })
    }

    pub fn set_suggestion_visibility(&self, visible: bool) -> Result<(), LabelError> {
        self.write(|s| {
            let events =
                if s.suggestions_visible == visible { vec![] } else { vec![WorkflowEvent::SuggestionVisibilitySet { visible }] };
            Ok((events, ()))
        })
    }

    /// Give every record without first-round assignments two reviewers.
    pub fn assign(&self, seed: u64) -> Result<Vec<Assignment>, LabelError> {
        self.write(|s| {
            let todo: Vec<String> = s
                .records
                .iter()
                .filter(|r| s.record_assignments(&r.id, ReviewRound::Primary).next().is_none())
                .map(|r| r.id.clone())
                .collect();
            let annotators: Vec<Annotator> = s.annotators().cloned().collect();
            let created = assign_reviews(&todo, &annotators, seed)?;
            let events =
                if created.is_empty() { vec![] } else { vec![WorkflowEvent::AssignmentsCreated { assignments: created.clone() }] };
            Ok((events, created))
        })
    }

    /// Store a review for an assignment. Resubmitting the same label is a
    /// no-op; a different label is a conflict and the first review stands.
    pub fn record_review(
        &self,
        assignment_id: &str,
        label: Label,
        note: Option<String>,
        at: DateTime<Utc>,
    ) -> Result<ReviewOutcome, LabelError> {
        self.write(|s| {
            let a = s.assignment(assignment_id).ok_or_else(|| LabelError::NotFound(format!("assignment {assignment_id}")))?;
            if let Some(existing) = s.review(assignment_id) {
                return if existing.label == label {
                    Ok((vec![], ReviewOutcome::Unchanged { review: existing.clone() }))
                } else {
                    Err(LabelError::Conflict { assignment_id: assignment_id.to_string(), stored: existing.label, attempted: label })
                };
            }
            let review = Review {
                assignment_id: a.id.clone(),
                record_id: a.record_id.clone(),
                annotator_id: a.annotator_id.clone(),
                label,
                note,
                submitted_at: at,
            };
            Ok((vec![WorkflowEvent::ReviewRecorded { review: review.clone() }], ReviewOutcome::Stored { review }))
        })
    }

    /// Explicitly correct a stored review, logging both labels.
    pub fn supersede(
        &self,
        assignment_id: &str,
        new_label: Label,
        reason: impl Into<String>,
        at: DateTime<Utc>,
    ) -> Result<Supersession, LabelError> {
        let reason = reason.into();
        self.write(|s| {
            let existing =
                s.review(assignment_id).ok_or_else(|| LabelError::NotFound(format!("review for {assignment_id}")))?;
            if existing.label == new_label {
                return Err(LabelError::Input(format!("review {assignment_id} already has label {new_label}")));
            }
            let sup = Supersession {
                assignment_id: assignment_id.to_string(),
                previous_label: existing.label,
                new_label,
                reason,
                at,
            };
            Ok((vec![WorkflowEvent::ReviewSuperseded { supersession: sup.clone() }], sup))
        })
    }

    /// Third review on an open disagreement by an annotator who was not one
    /// of the first two reviewers. Repeating it is idempotent.
    pub fn submit_tiebreak(
        &self,
        record_id: &str,
        annotator_id: &str,
        label: Label,
        note: Option<String>,
        at: DateTime<Utc>,
    ) -> Result<ReviewOutcome, LabelError> {
        let id = assignment_id(record_id, annotator_id);
        self.write(|s| {
            if s.annotator(annotator_id).is_none() {
                return Err(LabelError::NotFound(format!("annotator {annotator_id}")));
            }
            if s.record(record_id).is_none() {
                return Err(LabelError::NotFound(format!("record {record_id}")));
            }
            if let Some(existing) = s.review(&id).filter(|_| s.assignment(&id).is_some_and(|a| a.round == ReviewRound::Tiebreak)) {
                return if existing.label == label {
                    Ok((vec![], ReviewOutcome::Unchanged { review: existing.clone() }))
                } else {
                    Err(LabelError::Conflict { assignment_id: id.clone(), stored: existing.label, attempted: label })
                };
            }
            let [a, b] = s
                .open_disagreement(record_id)
                .ok_or_else(|| LabelError::Integrity(format!("record {record_id} has no open disagreement")))?;
            if a.annotator_id == annotator_id || b.annotator_id == annotator_id {
                return Err(LabelError::Integrity(format!(
                    "annotator {annotator_id} already reviewed {record_id} and cannot break the tie"
                )));
            }
            let assignment = Assignment {
                id: id.clone(),
                record_id: record_id.to_string(),
                annotator_id: annotator_id.to_string(),
                round: ReviewRound::Tiebreak,
                state: AssignmentState::Submitted,
            };
            let review = Review {
                assignment_id: id.clone(),
                record_id: record_id.to_string(),
                annotator_id: annotator_id.to_string(),
                label,
                note,
                submitted_at: at,
            };
            Ok((
                vec![
                    WorkflowEvent::AssignmentsCreated { assignments: vec![assignment] },
                    WorkflowEvent::ReviewRecorded { review: review.clone() },
                ],
                ReviewOutcome::Stored { review },
            ))
        })
    }
}
