//! Tokenization, vocabulary, TF-IDF vectorization, splitting and rebalancing.

mod matrix;
mod split;
mod tfidf;
mod tokenize;
mod vocabulary;

pub use matrix::{FeatureMatrix, RowView, SparseMatrix};
pub use split::{split, upsample, SplitSpec};
pub use tfidf::{count_matrix, featurize, tfidf, FeatureSet};
pub use tokenize::{tokenize, tokenize_all};
pub use vocabulary::{build_vocabulary, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("matrix format error on line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
