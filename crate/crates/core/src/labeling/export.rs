use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdjudicatedLabel, AgreementSummary, LabelError, PairAgreement, KAPPA_GATE};
use crate::ingest::ConsolidatedRecord;
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportOptions {
    /// Refuse to export while any record is unresolved.
    pub strict: bool,
    /// Pairs with fewer shared items are reported but never block.
    pub min_pair_items: usize,
    pub kappa_threshold: f64,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions { strict: true, min_pair_items: 30, kappa_threshold: KAPPA_GATE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub min_pair_items: usize,
    pub kappa_threshold: f64,
    pub passed: bool,
    pub failing_pairs: Vec<PairAgreement>,
    pub agreement: AgreementSummary,
}

impl GateReport {
    pub fn evaluate(agreement: &AgreementSummary, opts: &ExportOptions) -> Self {
        let failing_pairs: Vec<PairAgreement> = agreement
            .pairs
            .iter()
            .filter(|p| p.fails_gate(opts.min_pair_items, opts.kappa_threshold))
            .cloned()
            .collect();
        GateReport {
            min_pair_items: opts.min_pair_items,
            kappa_threshold: opts.kappa_threshold,
            passed: failing_pairs.is_empty(),
            failing_pairs,
            agreement: agreement.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportOutcome {
    pub written: usize,
    /// Records left out because they are not resolved (non-strict mode only).
    pub skipped_unresolved: Vec<String>,
    pub gate: GateReport,
}

/// Write resolved records with `label = final_label` as JSON Lines.
///
/// The agreement gate is checked first; then, in strict mode, any record
/// without a resolving adjudication blocks the export.
pub fn export_labeled_corpus(
    corpus: &[ConsolidatedRecord],
    adjudications: &[AdjudicatedLabel],
    agreement: &AgreementSummary,
    opts: &ExportOptions,
    out: impl AsRef<Path>,
) -> Result<ExportOutcome, LabelError> {
    let gate = GateReport::evaluate(agreement, opts);
    if !gate.passed {
        return Err(LabelError::GateRefused(Box::new(gate)));
    }
    let by_id: HashMap<&str, &AdjudicatedLabel> = adjudications.iter().map(|a| (a.record_id.as_str(), a)).collect();
    let mut labeled = Vec::new();
    let mut unresolved = Vec::new();
    for rec in corpus {
        match by_id.get(rec.id.as_str()).filter(|a| a.status.is_resolved()).and_then(|a| a.final_label) {
            Some(label) => labeled.push(ConsolidatedRecord { label: Some(label), ..rec.clone() }),
            None => unresolved.push(rec.id.clone()),
        }
    }
    if opts.strict && !unresolved.is_empty() {
        return Err(LabelError::ExportBlocked(unresolved));
    }
    jsonl::write(out, &labeled)?;
    Ok(ExportOutcome { written: labeled.len(), skipped_unresolved: unresolved, gate })
}
