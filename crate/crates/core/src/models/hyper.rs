use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ModelError, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    pub alpha: f64,
    pub fit_prior: bool,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { alpha: 1.0, fit_prior: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub c: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm is at most this.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { c: 1.0, max_iter: 1000, tol: 1e-6 }
    }
}

/// Stochastic subgradient training for hinge and squared-hinge losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSgdParams {
    pub c: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LinearSgdParams {
    fn default() -> Self {
        LinearSgdParams { c: 1.0, learning_rate: 0.01, epochs: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `⌊√d⌋`, at least one.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    /// Features to consider per split; `None` means all of them.
    pub fn resolve(self, n_features: usize) -> Option<usize> {
        let k = match self {
            MaxFeatures::All => return None,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::Count(k) => k.max(1),
        };
        (k < n_features).then_some(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_features: MaxFeatures::Sqrt, bootstrap: true, max_depth: None, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams { n_estimators: 50, learning_rate: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingParams {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for GradientBoostingParams {
    fn default() -> Self {
        GradientBoostingParams { learning_rate: 0.1, n_estimators: 100, max_depth: 3, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", content = "values", rename_all = "snake_case")]
pub enum KindParams {
    MultinomialNb(NbParams),
    BernoulliNb(NbParams),
    LogisticRegression(LogisticParams),
    SgdHinge(LinearSgdParams),
    LinearSvc(LinearSgdParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    Adaboost(AdaBoostParams),
    GradientBoosting(GradientBoostingParams),
    Knn(KnnParams),
}

/// Typed hyperparameters for one model kind plus the training seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    #[serde(flatten)]
    pub params: KindParams,
    pub seed: u64,
}

impl Hyperparameters {
    pub fn defaults(kind: ModelKind, seed: u64) -> Self {
        let params = match kind {
            ModelKind::MultinomialNb => KindParams::MultinomialNb(NbParams::default()),
            ModelKind::BernoulliNb => KindParams::BernoulliNb(NbParams::default()),
            ModelKind::LogisticRegression => KindParams::LogisticRegression(LogisticParams::default()),
            ModelKind::SgdHinge => KindParams::SgdHinge(LinearSgdParams::default()),
            ModelKind::LinearSvc => KindParams::LinearSvc(LinearSgdParams::default()),
            ModelKind::DecisionTree => KindParams::DecisionTree(TreeParams::default()),
            ModelKind::RandomForest => KindParams::RandomForest(ForestParams::default()),
            ModelKind::Adaboost => KindParams::Adaboost(AdaBoostParams::default()),
            ModelKind::GradientBoosting => KindParams::GradientBoosting(GradientBoostingParams::default()),
            ModelKind::Knn => KindParams::Knn(KnnParams::default()),
        };
        Hyperparameters { params, seed }
    }

    pub fn kind(&self) -> ModelKind {
        match self.params {
            KindParams::MultinomialNb(_) => ModelKind::MultinomialNb,
            KindParams::BernoulliNb(_) => ModelKind::BernoulliNb,
            KindParams::LogisticRegression(_) => ModelKind::LogisticRegression,
            KindParams::SgdHinge(_) => ModelKind::SgdHinge,
            KindParams::LinearSvc(_) => ModelKind::LinearSvc,
            KindParams::DecisionTree(_) => ModelKind::DecisionTree,
            KindParams::RandomForest(_) => ModelKind::RandomForest,
            KindParams::Adaboost(_) => ModelKind::Adaboost,
            KindParams::GradientBoosting(_) => ModelKind::GradientBoosting,
            KindParams::Knn(_) => ModelKind::Knn,
        }
    }

    /// Current values as a flat JSON object.
    pub fn values(&self) -> serde_json::Map<String, Value> {
        match serde_json::to_value(&self.params).expect("params serialize") {
            Value::Object(mut o) => match o.remove("values") {
                Some(Value::Object(v)) => v,
                _ => serde_json::Map::new(),
            },
            _ => unreachable!("tagged enum serializes to an object"),
        }
    }

    /// Override one named value. `raw` is parsed as JSON, falling back to a
    /// plain string, so `c=0.5`, `max_depth=null` and `max_features=all`
    /// all work. Unknown names and ill-typed values are rejected.
    pub fn with_override(&self, name: &str, raw: &str) -> Result<Self, ModelError> {
        let mut values = self.values();
        if !values.contains_key(name) {
            let known: Vec<&str> = values.keys().map(String::as_str).collect();
            return Err(ModelError::Config(format!(
                "{} has no hyperparameter {name:?} (known: {})",
                self.kind(),
                known.join(", ")
            )));
        }
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        values.insert(name.to_string(), parsed);
        let tagged = serde_json::json!({ "model_kind": self.kind().as_str(), "values": values });
        let params: KindParams = serde_json::from_value(tagged)
            .map_err(|e| ModelError::Config(format!("invalid value {raw:?} for {name}: {e}")))?;
        let hp = Hyperparameters { params, seed: self.seed };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(format!("{}: {m}", self.kind())));
        match &self.params {
            KindParams::MultinomialNb(p) | KindParams::BernoulliNb(p) if !(p.alpha > 0.0 && p.alpha.is_finite()) => {
                bad("alpha must be positive")
            }
            KindParams::LogisticRegression(p) if !(p.c > 0.0 && p.tol > 0.0) => bad("c and tol must be positive"),
            KindParams::SgdHinge(p) | KindParams::LinearSvc(p) if !(p.c > 0.0 && p.learning_rate > 0.0) => {
                bad("c and learning_rate must be positive")
            }
            KindParams::DecisionTree(p) if p.min_samples_split < 2 => bad("min_samples_split must be at least 2"),
            KindParams::RandomForest(p) if p.n_trees == 0 || p.min_samples_split < 2 => {
                bad("n_trees must be positive and min_samples_split at least 2")
            }
            KindParams::Adaboost(p) if p.n_estimators == 0 || (p.learning_rate.is_nan() || p.learning_rate <= 0.0) => {
                bad("n_estimators and learning_rate must be positive")
            }
            KindParams::GradientBoosting(p) if p.n_estimators == 0 || p.max_depth == 0 || (p.learning_rate.is_nan() || p.learning_rate <= 0.0) => {
                bad("n_estimators, max_depth and learning_rate must be positive")
            }
            KindParams::Knn(p) if p.k == 0 => bad("k must be positive"),
            _ => Ok(()),
        }
    }
}
