use rand::seq::SliceRandom;

use super::{Annotator, Assignment, AssignmentState, LabelError, ReviewRound};
use crate::rng;

pub fn assignment_id(record_id: &str, annotator_id: &str) -> String {
    format!("{record_id}::{annotator_id}")
}

/// Two distinct reviewers per record, dealt round-robin over a seeded
/// permutation of the annotators.
///
/// Consecutive slots of the cycle are always distinct annotators when there
/// are at least two, and per-annotator loads differ by at most one.
pub fn assign_reviews(records: &[String], annotators: &[Annotator], seed: u64) -> Result<Vec<Assignment>, LabelError> {
    if annotators.len() < 2 {
        return Err(LabelError::Config(format!("need at least 2 annotators, got {}", annotators.len())));
    }
    let mut order: Vec<&Annotator> = annotators.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    order.dedup_by(|a, b| a.id == b.id);
    if order.len() < 2 {
        return Err(LabelError::Config("need at least 2 distinct annotators".into()));
    }
    order.shuffle(&mut rng::seeded(seed));
    let m = order.len();
    let mut out = Vec::with_capacity(records.len() * 2);
    for (i, record_id) in records.iter().enumerate() {
        for slot in [2 * i, 2 * i + 1] {
            let annotator = order[slot % m];
            out.push(Assignment {
                id: assignment_id(record_id, &annotator.id),
                record_id: record_id.clone(),
                annotator_id: annotator.id.clone(),
                round: ReviewRound::Primary,
                state: AssignmentState::Pending,
            });
        }
    }
    Ok(out)
}
