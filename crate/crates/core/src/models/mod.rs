//! Classifier hub: ten classical models behind one train/predict contract.
//!
//! Multinomial naive Bayes reads raw term counts, Bernoulli naive Bayes
//! binarizes them, and every other model reads the TF-IDF rows.

mod boost;
mod external;
mod forest;
mod hyper;
mod knn;
mod linear;
mod nb;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use boost::{stage_weight, AdaBoost, AdaStage, GradientBoosting};
pub use external::{import_external_predictions, write_predictions, ExternalPredictions, PredictionHeader, PredictionRow};
pub use forest::RandomForest;
pub use hyper::{
    AdaBoostParams, ForestParams, GradientBoostingParams, Hyperparameters, KindParams, KnnParams, LinearSgdParams,
    LogisticParams, MaxFeatures, NbParams, TreeParams,
};
pub use knn::Knn;
pub use linear::{LinearLoss, LinearModel, LogisticObjective};
pub use nb::{NaiveBayes, NbVariant};
pub use tree::{DecisionTree, Node};

use crate::features::{FeatureSet, SparseMatrix, Vocabulary};
use crate::Label;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    MultinomialNb,
    BernoulliNb,
    LogisticRegression,
    SgdHinge,
    LinearSvc,
    DecisionTree,
    RandomForest,
    Adaboost,
    GradientBoosting,
    Knn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::MultinomialNb,
        ModelKind::BernoulliNb,
        ModelKind::LogisticRegression,
        ModelKind::SgdHinge,
        ModelKind::LinearSvc,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::Adaboost,
        ModelKind::GradientBoosting,
        ModelKind::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::MultinomialNb => "multinomial_nb",
            ModelKind::BernoulliNb => "bernoulli_nb",
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::SgdHinge => "sgd_hinge",
            ModelKind::LinearSvc => "linear_svc",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Adaboost => "adaboost",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::Knn => "knn",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::MultinomialNb => "Multinomial Naive Bayes",
            ModelKind::BernoulliNb => "Bernoulli Naive Bayes",
            ModelKind::LogisticRegression => "Logistic Regression",
            ModelKind::SgdHinge => "SGD Classifier",
            ModelKind::LinearSvc => "Linear SVC",
            ModelKind::DecisionTree => "Decision Tree",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::Adaboost => "AdaBoost",
            ModelKind::GradientBoosting => "Gradient Boosting",
            ModelKind::Knn => "K-Nearest Neighbors",
        }
    }

    /// False for kinds whose defaults are invented rather than published.
    pub fn has_published_defaults(self) -> bool {
        self != ModelKind::Knn
    }

    pub fn is_linear(self) -> bool {
        matches!(self, ModelKind::LogisticRegression | ModelKind::SgdHinge | ModelKind::LinearSvc)
    }

    pub fn is_naive_bayes(self) -> bool {
        matches!(self, ModelKind::MultinomialNb | ModelKind::BernoulliNb)
    }

    /// Which matrix of a [`FeatureSet`] this kind consumes.
    pub fn input(self, features: &FeatureSet) -> &SparseMatrix {
        if self.is_naive_bayes() {
            &features.counts
        } else {
            &features.tfidf
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::Config(format!("unknown model kind {s:?}")))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training error: {0}")]
    Training(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("degenerate weak learner: first-round weighted error {error} is not below 0.5")]
    DegenerateLearner { error: f64 },
    #[error("feature dimension mismatch: model expects {expected} columns, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("vocabulary fingerprint mismatch: model {expected}, features {got}")]
    Fingerprint { expected: String, got: String },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reject single-class or mismatched training data.
pub(crate) fn check_training(x: &SparseMatrix, y: &[Label]) -> Result<(), ModelError> {
    if x.n_rows() != y.len() {
        return Err(ModelError::Input(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if !x.all_finite() {
        return Err(ModelError::Input("feature matrix contains non-finite values".into()));
    }
    let fakes = y.iter().filter(|l| l.is_fake()).count();
    if fakes == 0 || fakes == y.len() {
        return Err(ModelError::Training("training labels must contain both classes".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    NaiveBayes(NaiveBayes),
    Linear(LinearModel),
    Tree(DecisionTree),
    Forest(RandomForest),
    AdaBoost(AdaBoost),
    GradientBoosting(GradientBoosting),
    Knn(Knn),
}

impl ModelParams {
    fn predict(&self, x: &SparseMatrix) -> Vec<Label> {
        match self {
            ModelParams::NaiveBayes(m) => m.predict(x),
            ModelParams::Linear(m) => m.predict(x),
            ModelParams::Tree(m) => m.predict(x),
            ModelParams::Forest(m) => m.predict(x),
            ModelParams::AdaBoost(m) => m.predict(x),
            ModelParams::GradientBoosting(m) => m.predict(x),
            ModelParams::Knn(m) => m.predict(x),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub n_train: usize,
    /// Optimizer iterations, epochs or boosting rounds actually run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trained_at: Option<DateTime<Utc>>,
}

/// Versioned, self-describing model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub hyperparameters: Hyperparameters,
    pub vocabulary_fingerprint: String,
    pub n_features: usize,
    pub metadata: TrainingMetadata,
    pub params: ModelParams,
    /// Embedded so the model can featurize new text on its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vocabulary>,
}

impl TrainedModel {
    pub fn predict(&self, features: &FeatureSet) -> Result<Vec<Label>, ModelError> {
        self.predict_matrix(self.kind.input(features))
    }

    /// Predict from the matrix this kind consumes (counts for naive Bayes,
    /// TF-IDF otherwise).
    pub fn predict_matrix(&self, x: &SparseMatrix) -> Result<Vec<Label>, ModelError> {
        if x.n_rows() > 0 && x.n_cols() != self.n_features {
            return Err(ModelError::Dimension { expected: self.n_features, got: x.n_cols() });
        }
        if !x.all_finite() {
            return Err(ModelError::Input("feature matrix contains non-finite values".into()));
        }
        Ok(self.params.predict(x))
    }

    pub fn check_fingerprint(&self, fingerprint: &str) -> Result<(), ModelError> {
        if self.vocabulary_fingerprint != fingerprint {
            return Err(ModelError::Fingerprint { expected: self.vocabulary_fingerprint.clone(), got: fingerprint.to_string() });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let m: TrainedModel = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Format(format!("unsupported format version {}", m.format_version)));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Fit one model on a raw matrix, already chosen for the kind.
pub fn train_matrix(x: &SparseMatrix, y: &[Label], hp: &Hyperparameters) -> Result<(ModelParams, Option<usize>), ModelError> {
    let seed = hp.seed;
    Ok(match &hp.params {
        KindParams::MultinomialNb(p) => (ModelParams::NaiveBayes(NaiveBayes::fit(x, y, NbVariant::Multinomial, p)?), None),
        KindParams::BernoulliNb(p) => (ModelParams::NaiveBayes(NaiveBayes::fit(x, y, NbVariant::Bernoulli, p)?), None),
        KindParams::LogisticRegression(p) => {
            let m = LinearModel::fit_logistic(x, y, p)?;
            let it = m.iterations;
            (ModelParams::Linear(m), Some(it))
        }
        KindParams::SgdHinge(p) => {
            let m = LinearModel::fit_sgd(x, y, linear::SgdLoss::Hinge, p, seed)?;
            let it = m.iterations;
            (ModelParams::Linear(m), Some(it))
        }
        KindParams::LinearSvc(p) => {
            let m = LinearModel::fit_sgd(x, y, linear::SgdLoss::SquaredHinge, p, seed)?;
            let it = m.iterations;
            (ModelParams::Linear(m), Some(it))
        }
        KindParams::DecisionTree(p) => (ModelParams::Tree(DecisionTree::fit(x, y, p)?), None),
        KindParams::RandomForest(p) => (ModelParams::Forest(RandomForest::fit(x, y, p, seed)?), None),
        KindParams::Adaboost(p) => {
            let m = AdaBoost::fit(x, y, p)?;
            let it = m.stages.len();
            (ModelParams::AdaBoost(m), Some(it))
        }
        KindParams::GradientBoosting(p) => {
            let m = GradientBoosting::fit(x, y, p)?;
            let it = m.trees.len();
            (ModelParams::GradientBoosting(m), Some(it))
        }
        KindParams::Knn(p) => (ModelParams::Knn(Knn::fit(x, y, p)?), None),
    })
}

/// Fit the model described by `hp` on a feature set.
pub fn train(features: &FeatureSet, y: &[Label], hp: &Hyperparameters, fingerprint: &str) -> Result<TrainedModel, ModelError> {
    let kind = hp.kind();
    let x = kind.input(features);
    let (params, iterations) = train_matrix(x, y, hp)?;
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        hyperparameters: hp.clone(),
        vocabulary_fingerprint: fingerprint.to_string(),
        n_features: x.n_cols(),
        metadata: TrainingMetadata { seed: hp.seed, n_train: x.n_rows(), iterations, trained_at: None },
        params,
        vocabulary: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{build_vocabulary, featurize, tokenize_all};

    fn toy() -> (FeatureSet, Vec<Label>, String) {
        let texts = [
            "fake hoax shocking claim",
            "hoax fake fake viral",
            "shocking hoax revealed fake",
            "official report released today",
            "minister report official statement",
            "report statement today official",
        ];
        let tokens = tokenize_all(&texts);
        let vocab = build_vocabulary(&tokens, 1, None).unwrap();
        let ids = (0..texts.len()).map(|i| i.to_string()).collect();
        let y = [1, 1, 1, 0, 0, 0].iter().map(|&b: &u8| Label::try_from(b).unwrap()).collect();
        (featurize(&tokens, &vocab, ids), y, vocab.fingerprint())
    }

    #[test]
    fn every_kind_trains_predicts_and_round_trips() {
        let (fs, y, fp) = toy();
        for kind in ModelKind::ALL {
            let mut hp = Hyperparameters::defaults(kind, 7);
            if kind == ModelKind::Knn {
                hp = hp.with_override("k", "3").unwrap();
            }
            let m = train(&fs, &y, &hp, &fp).unwrap();
            let pred = m.predict(&fs).unwrap();
            assert_eq!(pred.len(), y.len(), "{kind}");
            let back = TrainedModel::from_json(&m.to_json()).unwrap();
            assert_eq!(back.predict(&fs).unwrap(), pred, "{kind}");
            let empty = FeatureSet { counts: SparseMatrix::empty(fs.n_cols()), tfidf: SparseMatrix::empty(fs.n_cols()), row_ids: vec![] };
            assert!(m.predict(&empty).unwrap().is_empty());
            let wrong = SparseMatrix::from_dense(&[vec![1.0; fs.n_cols() + 1]]);
            assert!(matches!(m.predict_matrix(&wrong), Err(ModelError::Dimension { .. })));
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.as_str().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("svc".parse::<ModelKind>().is_err());
    }

    #[test]
    fn single_class_rejected() {
        let (fs, _, fp) = toy();
        let y = vec![Label::Fake; fs.n_rows()];
        for kind in ModelKind::ALL.into_iter().filter(|k| *k != ModelKind::DecisionTree) {
            let hp = Hyperparameters::defaults(kind, 1).with_override("k", "3").unwrap_or_else(|_| Hyperparameters::defaults(kind, 1));
            assert!(train(&fs, &y, &hp, &fp).is_err(), "{kind}");
        }
    }
}
