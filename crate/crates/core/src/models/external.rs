use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::Label;

/// First line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionHeader {
    pub model_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub record_id: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalPredictions {
    pub model_name: String,
    pub rows: Vec<PredictionRow>,
    /// Ids absent from the evaluation corpus (kept out of `rows`).
    pub unmatched: Vec<String>,
}

#[derive(Deserialize)]
struct RawRow {
    record_id: String,
    label: serde_json::Value,
}

/// Parse a predictions file: a `{"model_name": …}` header line followed by
/// `{"record_id": …, "label": 0|1}` lines.
///
/// With `corpus_ids`, unknown ids are an error in strict mode and are
/// reported in `unmatched` otherwise.
pub fn import_external_predictions(
    path: impl AsRef<Path>,
    corpus_ids: Option<&HashSet<String>>,
    strict: bool,
) -> Result<ExternalPredictions, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_predictions(&text, corpus_ids, strict).map_err(|e| match e {
        ModelError::Input(m) => ModelError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub(crate) fn parse_predictions(
    text: &str,
    corpus_ids: Option<&HashSet<String>>,
    strict: bool,
) -> Result<ExternalPredictions, ModelError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| ModelError::Input("empty predictions file".into()))?;
    let header: PredictionHeader =
        serde_json::from_str(head).map_err(|e| ModelError::Input(format!("line 1: bad header: {e}")))?;
    let mut rows = Vec::new();
    let mut unmatched = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let raw: RawRow = serde_json::from_str(line).map_err(|e| ModelError::Input(format!("line {lineno}: {e}")))?;
        let label = raw
            .label
            .as_i64()
            .and_then(|v| Label::try_from(v).ok())
            .ok_or_else(|| ModelError::Input(format!("line {lineno}: label {} is not 0 or 1", raw.label)))?;
        if !seen.insert(raw.record_id.clone()) {
            return Err(ModelError::Input(format!("line {lineno}: duplicate record id {}", raw.record_id)));
        }
        if corpus_ids.is_some_and(|ids| !ids.contains(&raw.record_id)) {
            unmatched.push(raw.record_id);
            continue;
        }
        rows.push(PredictionRow { record_id: raw.record_id, label });
    }
    if strict && !unmatched.is_empty() {
        return Err(ModelError::Input(format!("record ids not in the corpus: {}", unmatched.join(", "))));
    }
    Ok(ExternalPredictions { model_name: header.model_name, rows, unmatched })
}

pub fn write_predictions(path: impl AsRef<Path>, model_name: &str, rows: &[PredictionRow]) -> Result<(), ModelError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", serde_json::to_string(&PredictionHeader { model_name: model_name.to_string() }).expect("header"))?;
    for r in rows {
        writeln!(out, "{}", serde_json::to_string(r).expect("row"))?;
    }
    out.flush()?;
    Ok(())
}
