//! Confusion matrices, the four headline metrics, leaderboards and
//! Table-1/Table-2-shaped reports.

mod report;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use report::{render_report, whole_percent, EvaluationReport, RenderOptions, ReportFormat, REPORT_FORMAT_VERSION};

use crate::models::PredictionRow;
use crate::Label;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The matrix seen with 0 and 1 swapped.
    pub fn flipped(&self) -> Self {
        ConfusionMatrix { tp: self.tn, fp: self.fn_, tn: self.tp, fn_: self.fp }
    }
}

/// Count outcomes with label 1 (fake) as the positive class.
pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::Input(format!("{} true labels but {} predictions", y_true.len(), y_pred.len())));
    }
    if y_true.is_empty() {
        return Err(EvalError::Input("no labels to compare".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t.is_fake(), p.is_fake()) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateFlag {
    /// `TP + FP = 0`.
    PrecisionUndefined,
    /// `TP + FN = 0`.
    RecallUndefined,
    /// `precision + recall = 0`.
    F1Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_name: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default)]
    pub degenerate_flags: BTreeSet<DegenerateFlag>,
    pub confusion: ConfusionMatrix,
    /// Free-form caveats shown under the tables.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MetricsReport {
    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Accuracy, precision, recall and F1. A zero denominator yields 0 and the
/// matching flag instead of NaN.
pub fn metrics(cm: &ConfusionMatrix, model_name: &str) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Input("empty confusion matrix".into()));
    }
    let mut flags = BTreeSet::new();
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp).unwrap_or_else(|| {
        flags.insert(DegenerateFlag::PrecisionUndefined);
        0.0
    });
    let recall = ratio(cm.tp, cm.tp + cm.fn_).unwrap_or_else(|| {
        flags.insert(DegenerateFlag::RecallUndefined);
        0.0
    });
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        flags.insert(DegenerateFlag::F1Undefined);
        0.0
    };
    Ok(MetricsReport {
        model_name: model_name.to_string(),
        accuracy,
        precision,
        recall,
        f1,
        degenerate_flags: flags,
        confusion: *cm,
        notes: Vec::new(),
    })
}

/// Score predictions keyed by record id against ground truth. Every truth
/// record must have a prediction and every prediction a truth record.
pub fn score_predictions(
    truth: &HashMap<String, Label>,
    predictions: &[PredictionRow],
    model_name: &str,
) -> Result<MetricsReport, EvalError> {
    let mut y_true = Vec::with_capacity(predictions.len());
    let mut y_pred = Vec::with_capacity(predictions.len());
    let mut unknown = Vec::new();
    let mut covered = std::collections::HashSet::new();
    for p in predictions {
        match truth.get(&p.record_id) {
            Some(&t) => {
                if !covered.insert(p.record_id.as_str()) {
                    return Err(EvalError::Input(format!("duplicate prediction for {}", p.record_id)));
                }
                y_true.push(t);
                y_pred.push(p.label);
            }
            None => unknown.push(p.record_id.clone()),
        }
    }
    if !unknown.is_empty() {
        unknown.sort();
        return Err(EvalError::Input(format!("{model_name}: predictions for unknown records: {}", unknown.join(", "))));
    }
    let mut missing: Vec<&str> = truth.keys().map(String::as_str).filter(|id| !covered.contains(id)).collect();
    if !missing.is_empty() {
        missing.sort_unstable();
        return Err(EvalError::Input(format!("{model_name}: no prediction for: {}", missing.join(", "))));
    }
    metrics(&confusion(&y_true, &y_pred)?, model_name)
}

/// Which metric columns a leaderboard row holds the maximum of.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestFlags {
    pub accuracy: bool,
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    #[serde(flatten)]
    pub report: MetricsReport,
    pub best: BestFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub rows: Vec<LeaderboardRow>,
}

fn rank(a: &MetricsReport, b: &MetricsReport) -> std::cmp::Ordering {
    b.f1.total_cmp(&a.f1).then(b.accuracy.total_cmp(&a.accuracy)).then_with(|| a.model_name.cmp(&b.model_name))
}

/// Sort by F1 descending, then accuracy descending, then model name, and
/// flag each column's maximum.
pub fn leaderboard(mut reports: Vec<MetricsReport>) -> Result<Leaderboard, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::Input("leaderboard needs at least one report".into()));
    }
    reports.sort_by(rank);
    let max = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let (ma, mp, mr, mf) = (max(|r| r.accuracy), max(|r| r.precision), max(|r| r.recall), max(|r| r.f1));
    let rows = reports
        .into_iter()
        .map(|r| {
            let best = BestFlags { accuracy: r.accuracy == ma, precision: r.precision == mp, recall: r.recall == mr, f1: r.f1 == mf };
            LeaderboardRow { report: r, best }
        })
        .collect();
    Ok(Leaderboard { rows })
}

impl Leaderboard {
    pub fn reports(&self) -> impl Iterator<Item = &MetricsReport> {
        self.rows.iter().map(|r| &r.report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(bits: &[u8]) -> Vec<Label> {
        bits.iter().map(|&b| Label::try_from(b).unwrap()).collect()
    }

    #[test]
    fn confusion_counts() {
        let cm = confusion(&labels(&[1, 1, 0, 0]), &labels(&[1, 0, 0, 1])).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(1, 1, 1, 1));
        let y = labels(&[1, 0, 1]);
        let cm = confusion(&y, &y).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
        assert!(confusion(&labels(&[1]), &labels(&[0, 1])).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn distilbert_row() {
        let m = metrics(&ConfusionMatrix::new(72, 5, 15, 8), "DistilBERT").unwrap();
        assert!((m.accuracy - 0.87).abs() < 1e-12);
        assert!((m.precision - 72.0 / 77.0).abs() < 1e-12);
        assert!((m.recall - 0.9).abs() < 1e-12);
        assert!((m.f1 - 0.9172).abs() < 5e-5);
        assert!(m.degenerate_flags.is_empty());
    }

    #[test]
    fn perfect_and_degenerate() {
        let m = metrics(&ConfusionMatrix::new(10, 0, 10, 0), "p").unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        let d = metrics(&ConfusionMatrix::new(0, 0, 5, 5), "d").unwrap();
        assert_eq!((d.precision, d.recall, d.f1), (0.0, 0.0, 0.0));
        assert_eq!(
            d.degenerate_flags.iter().copied().collect::<Vec<_>>(),
            vec![DegenerateFlag::PrecisionUndefined, DegenerateFlag::F1Undefined]
        );
        assert!(metrics(&ConfusionMatrix::default(), "e").is_err());
    }

    fn rep(name: &str, acc: f64, f1: f64) -> MetricsReport {
        MetricsReport {
            model_name: name.into(),
            accuracy: acc,
            precision: 0.5,
            recall: 0.5,
            f1,
            degenerate_flags: BTreeSet::new(),
            confusion: ConfusionMatrix::new(1, 1, 1, 1),
            notes: vec![],
        }
    }

    #[test]
    fn leaderboard_order_and_flags() {
        let lb = leaderboard(vec![rep("b", 0.7, 0.57), rep("a", 0.7, 0.84), rep("c", 0.7, 0.42)]).unwrap();
        assert_eq!(lb.reports().map(|r| r.f1).collect::<Vec<_>>(), vec![0.84, 0.57, 0.42]);
        assert!(lb.rows[0].best.f1 && !lb.rows[1].best.f1);
        let lb = leaderboard(vec![rep("x", 0.78, 0.5), rep("y", 0.80, 0.5)]).unwrap();
        assert_eq!(lb.rows[0].report.model_name, "y");
        let lb = leaderboard(vec![rep("solo", 0.1, 0.1)]).unwrap();
        assert_eq!(lb.rows[0].best, BestFlags { accuracy: true, precision: true, recall: true, f1: true });
        assert!(leaderboard(vec![]).is_err());
    }

    #[test]
    fn score_predictions_aligns_by_id() {
        let truth: HashMap<String, Label> = [("a", 1u8), ("b", 0)].iter().map(|(k, v)| (k.to_string(), Label::try_from(*v).unwrap())).collect();
        let rows = vec![
            PredictionRow { record_id: "b".into(), label: Label::Fake },
            PredictionRow { record_id: "a".into(), label: Label::Fake },
        ];
        let m = score_predictions(&truth, &rows, "m").unwrap();
        assert_eq!(m.confusion, ConfusionMatrix::new(1, 1, 0, 0));
        assert!(score_predictions(&truth, &rows[..1], "m").is_err());
    }

    proptest! {
        #[test]
        fn permutation_and_polarity(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..50), seed in any::<u64>()) {
            let t: Vec<Label> = pairs.iter().map(|p| Label::try_from(p.0).unwrap()).collect();
            let p: Vec<Label> = pairs.iter().map(|q| Label::try_from(q.1).unwrap()).collect();
            let cm = confusion(&t, &p).unwrap();
            let mut idx: Vec<usize> = (0..t.len()).collect();
            use rand::seq::SliceRandom;
            idx.shuffle(&mut crate::rng::seeded(seed));
            let tp: Vec<Label> = idx.iter().map(|&i| t[i]).collect();
            let pp: Vec<Label> = idx.iter().map(|&i| p[i]).collect();
            prop_assert_eq!(confusion(&tp, &pp).unwrap(), cm);
            let tf: Vec<Label> = t.iter().map(|l| l.flip()).collect();
            let pf: Vec<Label> = p.iter().map(|l| l.flip()).collect();
            prop_assert_eq!(confusion(&tf, &pf).unwrap(), cm.flipped());
        }

        #[test]
        fn harmonic_mean_bounds(tp in 1u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            let m = metrics(&ConfusionMatrix::new(tp, fp, tn, fn_), "m").unwrap();
            prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-15);
            prop_assert!(m.f1 >= m.precision.min(m.recall) - 1e-15);
            prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-12);
        }

        #[test]
        fn leaderboard_sort_is_fixed_point(vals in prop::collection::vec((0u8..5, 0u8..5, 0u8..3), 1..12)) {
            let reps: Vec<MetricsReport> = vals.iter().enumerate()
                .map(|(i, (a, f, n))| rep(&format!("m{n}{i}"), *a as f64 / 4.0, *f as f64 / 4.0)).collect();
            let lb = leaderboard(reps).unwrap();
            let again = leaderboard(lb.reports().cloned().collect()).unwrap();
            prop_assert_eq!(lb, again);
        }
    }
}
