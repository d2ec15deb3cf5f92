use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::LabelError;
use crate::Label;

/// One reviewer's label for a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewVote {
    pub annotator_id: String,
    pub label: Label,
}

impl ReviewVote {
    pub fn new(annotator_id: impl Into<String>, label: Label) -> Self {
        ReviewVote { annotator_id: annotator_id.into(), label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjudicationStatus {
    Agreed,
    NeedsAdjudication,
    AdjudicatedByThird,
}

impl AdjudicationStatus {
    pub fn is_resolved(self) -> bool {
        self != AdjudicationStatus::NeedsAdjudication
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicatedLabel {
    pub record_id: String,
    pub final_label: Option<Label>,
    pub status: AdjudicationStatus,
    pub resolver_id: Option<String>,
}

/// Resolve two first-round reviews, plus an optional tie-break third.
///
/// Two equal labels are agreed. Two different labels need adjudication until
/// a third, distinct annotator votes; the majority of the three then stands.
pub fn adjudicate(record_id: &str, reviews: &[ReviewVote]) -> Result<AdjudicatedLabel, LabelError> {
    if !(2..=3).contains(&reviews.len()) {
        return Err(LabelError::Input(format!(
            "record {record_id}: expected two reviews (plus an optional third), got {}",
            reviews.len()
        )));
    }
    let distinct: HashSet<&str> = reviews.iter().map(|r| r.annotator_id.as_str()).collect();
    if distinct.len() != reviews.len() {
        return Err(LabelError::Integrity(format!("record {record_id}: reviews from the same annotator")));
    }
    let (first, second) = (reviews[0].label, reviews[1].label);
    let (final_label, status, resolver_id) = match reviews.get(2) {
        _ if first == second => (Some(first), AdjudicationStatus::Agreed, None),
        None => (None, AdjudicationStatus::NeedsAdjudication, None),
        Some(third) => {
            let fakes = reviews.iter().filter(|r| r.label.is_fake()).count();
            (Some(Label::from(fakes >= 2)), AdjudicationStatus::AdjudicatedByThird, Some(third.annotator_id.clone()))
        }
    };
    Ok(AdjudicatedLabel { record_id: record_id.to_string(), final_label, status, resolver_id })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(a: &str, l: u8) -> ReviewVote {
        ReviewVote::new(a, Label::try_from(l).unwrap())
    }

    #[test]
    fn cases() {
        let agreed = adjudicate("r", &[v("a", 1), v("b", 1)]).unwrap();
        assert_eq!((agreed.status, agreed.final_label), (AdjudicationStatus::Agreed, Some(Label::Fake)));
        let open = adjudicate("r", &[v("a", 1), v("b", 0)]).unwrap();
        assert_eq!((open.status, open.final_label), (AdjudicationStatus::NeedsAdjudication, None));
        let third = adjudicate("r", &[v("a", 1), v("b", 0), v("c", 0)]).unwrap();
        assert_eq!(third.status, AdjudicationStatus::AdjudicatedByThird);
        assert_eq!(third.final_label, Some(Label::Real));
        assert_eq!(third.resolver_id.as_deref(), Some("c"));
    }

    #[test]
    fn same_annotator_is_integrity_error() {
        assert!(matches!(adjudicate("r", &[v("a", 1), v("a", 1)]), Err(LabelError::Integrity(_))));
        assert!(matches!(adjudicate("r", &[v("a", 1), v("b", 0), v("b", 1)]), Err(LabelError::Integrity(_))));
        assert!(adjudicate("r", &[v("a", 1)]).is_err());
    }

    #[test]
    fn pure_function_of_label_multiset() {
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let a = adjudicate("r", &[v("a", x), v("b", y)]).unwrap();
            let b = adjudicate("r", &[v("p", y), v("q", x)]).unwrap();
            assert_eq!((a.status, a.final_label), (b.status, b.final_label));
        }
    }
}
