use std::collections::BTreeMap;

use super::{SparseMatrix, Vocabulary};
use crate::par;

fn term_counts(tokens: &[String], vocab: &Vocabulary) -> BTreeMap<u32, f64> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    counts
}

/// Raw in-vocabulary term counts per document.
pub fn count_matrix(token_lists: &[Vec<String>], vocab: &Vocabulary) -> SparseMatrix {
    let rows = par::map(token_lists, |doc| term_counts(doc, vocab).into_iter().collect());
    SparseMatrix::from_rows(vocab.len(), rows)
}

/// `count · idf` per term, each row L2-normalized; rows without any
/// in-vocabulary token stay all-zero. Out-of-vocabulary tokens are ignored.
pub fn tfidf(token_lists: &[Vec<String>], vocab: &Vocabulary) -> SparseMatrix {
    let rows = par::map(token_lists, |doc| {
        let mut row: Vec<(u32, f64)> =
            term_counts(doc, vocab).into_iter().map(|(i, tf)| (i, tf * vocab.idf(i as usize))).collect();
        let norm = row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut row {
                *w /= norm;
            }
        }
        row
    });
    SparseMatrix::from_rows(vocab.len(), rows)
}

/// Both representations the model hub consumes: raw counts (multinomial
/// naive Bayes) and TF-IDF (everything else).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub counts: SparseMatrix,
    pub tfidf: SparseMatrix,
    pub row_ids: Vec<String>,
}

impl FeatureSet {
    pub fn n_rows(&self) -> usize {
        self.tfidf.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.tfidf.n_cols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureSet {
        FeatureSet {
            counts: self.counts.select_rows(rows),
            tfidf: self.tfidf.select_rows(rows),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
        }
    }
}

pub fn featurize(token_lists: &[Vec<String>], vocab: &Vocabulary, row_ids: Vec<String>) -> FeatureSet {
    assert_eq!(token_lists.len(), row_ids.len(), "one row id per document");
    FeatureSet { counts: count_matrix(token_lists, vocab), tfidf: tfidf(token_lists, vocab), row_ids }
}
