//! Corpus construction, annotation workflow, and classical text-classifier
//! benchmarking for binary fake/real news detection.
//!
//! The crate is organised along the pipeline:
//!
//! * [`ingest`] fetches feeds, extracts snippets, scrubs PII and consolidates
//!   curated and benchmark records into one corpus schema.
//! * [`labeling`] turns LLM label suggestions plus two independent human
//!   reviews into adjudicated labels, gated on Cohen's kappa.
//! * [`features`] tokenizes, builds vocabularies, computes TF-IDF, and splits
//!   and rebalances training data.
//! * [`models`] is the classifier hub with a uniform train/predict contract.
//! * [`eval`] computes confusion matrices, metrics, leaderboards and reports.
//! * [`pipeline`] wires features, hub and evaluation into one benchmark run.
//!
//! With the default `parallel` feature the data-parallel loops run on rayon;
//! without it they run sequentially and produce bit-identical output.

pub mod eval;
pub mod features;
pub mod ingest;
pub mod jsonl;
pub mod label;
pub mod labeling;
pub mod models;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod synthetic;

pub use label::Label;
