//! Features, hub training and evaluation wired into one benchmark run.

use serde::{Deserialize, Serialize};

use crate::eval::{confusion, leaderboard, metrics, EvalError, Leaderboard, MetricsReport};
use crate::features::{build_vocabulary, featurize, split, tokenize_all, upsample, FeatureError, FeatureSet, SplitSpec, Vocabulary};
use crate::ingest::{labels_of, ConsolidatedRecord, IngestError};
use crate::models::{train, Hyperparameters, ModelError, ModelKind, PredictionRow, TrainedModel};
use crate::{par, Label};

pub const KNN_NOTE: &str = "k = 5 with Euclidean distance are not published defaults";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("{kind}: {source}")]
    Model { kind: ModelKind, source: ModelError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterOverride {
    pub kind: ModelKind,
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Seed for every model; the split seed lives in `split`.
    pub seed: u64,
    pub split: SplitSpec,
    pub min_df: usize,
    pub max_features: Option<usize>,
    /// Oversample the minority class of the training split to parity.
    pub upsample: bool,
    pub kinds: Vec<ModelKind>,
    #[serde(default)]
    pub overrides: Vec<HyperparameterOverride>,
}

impl BenchmarkConfig {
    pub fn new(seed: u64) -> Self {
        BenchmarkConfig {
            seed,
            split: SplitSpec::with_seed(seed),
            min_df: 2,
            max_features: None,
            upsample: true,
            kinds: ModelKind::ALL.to_vec(),
            overrides: Vec::new(),
        }
    }

    pub fn hyperparameters(&self, kind: ModelKind) -> Result<Hyperparameters, PipelineError> {
        let mut hp = Hyperparameters::defaults(kind, self.seed);
        for o in self.overrides.iter().filter(|o| o.kind == kind) {
            hp = hp.with_override(&o.name, &o.value).map_err(|source| PipelineError::Model { kind, source })?;
        }
        Ok(hp)
    }
}

/// Train and test features for one split of a labeled corpus.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub vocabulary: Vocabulary,
    /// Training rows after upsampling, in index order of the augmented list.
    pub train: FeatureSet,
    pub y_train: Vec<Label>,
    pub test: FeatureSet,
    pub y_test: Vec<Label>,
    /// Distinct training rows before upsampling.
    pub n_train_distinct: usize,
}

/// Split, fit the vocabulary on the training side, upsample and vectorize.
///
/// The vocabulary sees only the distinct training documents, so neither test
/// text nor duplicated minority rows leak into document frequencies.
pub fn prepare(records: &[ConsolidatedRecord], cfg: &BenchmarkConfig) -> Result<PreparedData, PipelineError> {
    let labels = labels_of(records)?;
    let (train_idx, test_idx) = split(&labels, &cfg.split)?;
    let texts: Vec<&str> = records.iter().map(|r| r.text.as_str()).collect();
    let tokens = tokenize_all(&texts);
    let train_tokens: Vec<Vec<String>> = train_idx.iter().map(|&i| tokens[i].clone()).collect();
    let vocabulary = build_vocabulary(&train_tokens, cfg.min_df, cfg.max_features)?;
    let rows = if cfg.upsample { upsample(&train_idx, &labels, cfg.split.seed)? } else { train_idx.clone() };
    let pick = |idx: &[usize]| -> (FeatureSet, Vec<Label>) {
        let toks: Vec<Vec<String>> = idx.iter().map(|&i| tokens[i].clone()).collect();
        let ids = idx.iter().map(|&i| records[i].id.clone()).collect();
        (featurize(&toks, &vocabulary, ids), idx.iter().map(|&i| labels[i]).collect())
    };
    let (train, y_train) = pick(&rows);
    let (test, y_test) = pick(&test_idx);
    Ok(PreparedData { n_train_distinct: train_idx.len(), vocabulary, train, y_train, test, y_test })
}

/// Score one model on a labeled feature set.
pub fn evaluate_model(model: &TrainedModel, features: &FeatureSet, truth: &[Label]) -> Result<MetricsReport, PipelineError> {
    let kind = model.kind;
    let pred = model.predict(features).map_err(|source| PipelineError::Model { kind, source })?;
    let report = metrics(&confusion(truth, &pred)?, kind.display_name())?;
    Ok(if kind.has_published_defaults() { report } else { report.with_note(KNN_NOTE) })
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub leaderboard: Leaderboard,
    /// In the order of `BenchmarkConfig::kinds`.
    pub models: Vec<TrainedModel>,
    pub n_train: usize,
    pub n_test: usize,
    pub vocabulary_size: usize,
}

/// Train every configured kind on the same split and rank them on the test side.
pub fn run_benchmark(records: &[ConsolidatedRecord], cfg: &BenchmarkConfig) -> Result<BenchmarkRun, PipelineError> {
    if cfg.kinds.is_empty() {
        return Err(PipelineError::Config("no model kinds selected".into()));
    }
    let data = prepare(records, cfg)?;
    let fingerprint = data.vocabulary.fingerprint();
    let hps = cfg.kinds.iter().map(|&k| cfg.hyperparameters(k)).collect::<Result<Vec<_>, _>>()?;
    let trained = par::map(&hps, |hp| {
        let kind = hp.kind();
        let mut model =
            train(&data.train, &data.y_train, hp, &fingerprint).map_err(|source| PipelineError::Model { kind, source })?;
        let report = evaluate_model(&model, &data.test, &data.y_test)?;
        model.vocabulary = Some(data.vocabulary.clone());
        Ok::<_, PipelineError>((model, report))
    });
    let mut models = Vec::with_capacity(trained.len());
    let mut reports = Vec::with_capacity(trained.len());
    for t in trained {
        let (m, r) = t?;
        models.push(m);
        reports.push(r);
    }
    Ok(BenchmarkRun {
        leaderboard: leaderboard(reports)?,
        models,
        n_train: data.y_train.len(),
        n_test: data.y_test.len(),
        vocabulary_size: data.vocabulary.len(),
    })
}

/// Fit one model on a whole labeled corpus, vocabulary included in the model.
pub fn train_on_corpus(
    records: &[ConsolidatedRecord],
    hp: &Hyperparameters,
    min_df: usize,
    max_features: Option<usize>,
) -> Result<TrainedModel, PipelineError> {
    let kind = hp.kind();
    let labels = labels_of(records)?;
    let tokens = tokenize_all(&records.iter().map(|r| r.text.as_str()).collect::<Vec<_>>());
    let vocabulary = build_vocabulary(&tokens, min_df, max_features)?;
    let features = featurize(&tokens, &vocabulary, records.iter().map(|r| r.id.clone()).collect());
    let mut model =
        train(&features, &labels, hp, &vocabulary.fingerprint()).map_err(|source| PipelineError::Model { kind, source })?;
    model.vocabulary = Some(vocabulary);
    Ok(model)
}

/// Predict records (labeled or not) with a model that embeds its vocabulary.
pub fn predict_records(model: &TrainedModel, records: &[ConsolidatedRecord]) -> Result<Vec<PredictionRow>, PipelineError> {
    let kind = model.kind;
    let vocab = model
        .vocabulary
        .as_ref()
        .ok_or_else(|| PipelineError::Config(format!("{kind} model carries no vocabulary")))?;
    model.check_fingerprint(&vocab.fingerprint()).map_err(|source| PipelineError::Model { kind, source })?;
    let tokens = tokenize_all(&records.iter().map(|r| r.text.as_str()).collect::<Vec<_>>());
    let features = featurize(&tokens, vocab, records.iter().map(|r| r.id.clone()).collect());
    let labels = model.predict(&features).map_err(|source| PipelineError::Model { kind, source })?;
    Ok(records.iter().zip(labels).map(|(r, label)| PredictionRow { record_id: r.id.clone(), label }).collect())
}
