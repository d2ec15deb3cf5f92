use serde::{Deserialize, Serialize};

use super::LabelError;
use crate::Label;

/// Minimum kappa a reviewer pair must reach for the corpus to be exported.
pub const KAPPA_GATE: f64 = 0.80;

/// Cohen's kappa between two raters over the same items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(String, String)>,
    pub n_items: usize,
    /// Observed agreement.
    pub p_o: f64,
    /// Agreement expected by chance from the marginals.
    pub p_e: f64,
    pub kappa: f64,
    pub passes_gate: bool,
}

/// `kappa = (p_o − p_e) / (1 − p_e)` with
/// `p_e = P_a(1)·P_b(1) + P_a(0)·P_b(0)`.
pub fn cohen_kappa(labels_a: &[Label], labels_b: &[Label]) -> Result<AgreementReport, LabelError> {
    if labels_a.len() != labels_b.len() {
        return Err(LabelError::Input(format!(
            "rater label vectors differ in length ({} vs {})",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(LabelError::Input("no items to compare".into()));
    }
    let n = labels_a.len() as f64;
    let agree = labels_a.iter().zip(labels_b).filter(|(a, b)| a == b).count() as f64;
    let pos_a = labels_a.iter().filter(|l| l.is_fake()).count() as f64 / n;
    let pos_b = labels_b.iter().filter(|l| l.is_fake()).count() as f64 / n;
    let p_o = agree / n;
    let p_e = pos_a * pos_b + (1.0 - pos_a) * (1.0 - pos_b);
    if p_e >= 1.0 {
        return Err(LabelError::UndefinedKappa);
    }
    let kappa = (p_o - p_e) / (1.0 - p_e);
    Ok(AgreementReport { pair: None, n_items: labels_a.len(), p_o, p_e, kappa, passes_gate: kappa >= KAPPA_GATE })
}

/// Agreement of one reviewer pair on the records both reviewed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub annotators: (String, String),
    pub n_items: usize,
    /// `None` when kappa is undefined for this pair.
    pub report: Option<AgreementReport>,
}

impl PairAgreement {
    /// Whether this pair blocks export: enough shared items and kappa below
    /// the gate. Undefined kappa (both raters constant and identical, hence
    /// complete agreement) does not block.
    pub fn fails_gate(&self, min_items: usize, threshold: f64) -> bool {
        self.n_items >= min_items && self.report.as_ref().is_some_and(|r| r.kappa < threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub pairs: Vec<PairAgreement>,
    /// Kappa over every double-reviewed record, first vs second reviewer.
    pub pooled: Option<AgreementReport>,
    pub double_reviewed: usize,
    /// Records whose two reviews disagree and have no tie-break yet.
    pub unresolved_disagreements: usize,
}
