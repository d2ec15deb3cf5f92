use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FeatureError;

/// Term ↔ column index map with document frequencies.
///
/// Indices follow lexicographic term order with no gaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "VocabularyFile", try_from = "VocabularyFile")]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<u32>,
    n_documents: usize,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    term_to_index: BTreeMap<String, u32>,
    document_frequency: BTreeMap<String, u32>,
    n_documents: usize,
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            term_to_index: v.index.iter().map(|(t, i)| (t.clone(), *i)).collect(),
            document_frequency: v.terms.iter().cloned().zip(v.document_frequency.iter().copied()).collect(),
            n_documents: v.n_documents,
        }
    }
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = String;

    fn try_from(f: VocabularyFile) -> Result<Self, String> {
        let mut terms = vec![String::new(); f.term_to_index.len()];
        let mut seen = vec![false; terms.len()];
        for (t, &i) in &f.term_to_index {
            let i = i as usize;
            if i >= terms.len() || seen[i] {
                return Err(format!("indices are not a gapless 0..{} assignment", terms.len()));
            }
            seen[i] = true;
            terms[i] = t.clone();
        }
        let mut df = Vec::with_capacity(terms.len());
        for t in &terms {
            let d = *f.document_frequency.get(t).ok_or_else(|| format!("missing document frequency for {t:?}"))?;
            if d == 0 || d as usize > f.n_documents {
                return Err(format!("document frequency of {t:?} out of range"));
            }
            df.push(d);
        }
        Ok(Vocabulary::from_parts(terms, df, f.n_documents))
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, document_frequency: Vec<u32>, n_documents: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { terms, document_frequency, n_documents, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, index: usize) -> u32 {
        self.document_frequency[index]
    }

    /// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_documents as f64) / (1.0 + self.document_frequency[index] as f64)).ln() + 1.0
    }

    /// Hex digest identifying the column layout and idf statistics.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.n_documents.to_le_bytes());
        for (t, df) in self.terms.iter().zip(&self.document_frequency) {
            h.update(t.as_bytes());
            h.update([0u8]);
            h.update(df.to_le_bytes());
        }
        hex::encode(&h.finalize()[..16])
    }
}

/// Keep terms with document frequency ≥ `min_df`; optionally only the
/// `max_features` most frequent (ties by term). Indices are lexicographic.
pub fn build_vocabulary(
    token_lists: &[Vec<String>],
    min_df: usize,
    max_features: Option<usize>,
) -> Result<Vocabulary, FeatureError> {
    if token_lists.iter().all(|t| t.is_empty()) {
        return Err(FeatureError::Config("no tokens to build a vocabulary from".into()));
    }
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in token_lists {
        let unique: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u32)> = df.into_iter().filter(|&(_, d)| d as usize >= min_df.max(1)).collect();
    if let Some(k) = max_features {
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        kept.truncate(k);
    }
    if kept.is_empty() {
        return Err(FeatureError::Config(format!("vocabulary is empty with min_df = {min_df}")));
    }
    kept.sort_by(|a, b| a.0.cmp(b.0));
    let (terms, dfs) = kept.into_iter().map(|(t, d)| (t.to_string(), d)).unzip();
    Ok(Vocabulary::from_parts(terms, dfs, token_lists.len()))
}
