use serde::{Deserialize, Serialize};

use super::tree::{eval_nodes, Criterion, GrowParams, Node, TreeBuilder};
use super::{check_training, AdaBoostParams, DecisionTree, GradientBoostingParams, ModelError};
use crate::features::{RowView, SparseMatrix};
use crate::Label;

/// Errors at or below this count as a perfect weak learner.
const PERFECT_ERROR: f64 = 1e-10;

/// `α = learning_rate · ½ · ln((1 − ε) / ε)`.
pub fn stage_weight(error: f64, learning_rate: f64) -> f64 {
    learning_rate * 0.5 * ((1.0 - error) / error).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaStage {
    pub alpha: f64,
    pub error: f64,
    pub stump: DecisionTree,
}

/// Discrete AdaBoost over depth-1 gini trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stages: Vec<AdaStage>,
    /// Sum of sample weights after each round's normalization.
    pub weight_sums: Vec<f64>,
}

impl AdaBoost {
    pub fn fit(x: &SparseMatrix, y: &[Label], p: &AdaBoostParams) -> Result<Self, ModelError> {
        check_training(x, y)?;
        let n = y.len();
        let gp = GrowParams { criterion: Criterion::Gini, max_depth: Some(1), min_samples_split: 2, max_features: None };
        let mut w = vec![1.0 / n as f64; n];
        let mut stages = Vec::new();
        let mut weight_sums = Vec::new();
        for round in 0..p.n_estimators {
            let stump = DecisionTree::fit_weighted(x, y, &w, &gp, None);
            let pred = stump.predict(x);
            let error: f64 = (0..n).filter(|&i| pred[i] != y[i]).map(|i| w[i]).sum();
            if error >= 0.5 {
                if round == 0 {
                    return Err(ModelError::DegenerateLearner { error });
                }
                break;
            }
            if error <= PERFECT_ERROR {
                stages.push(AdaStage { alpha: stage_weight(PERFECT_ERROR, p.learning_rate), error, stump });
                break;
            }
            let alpha = stage_weight(error, p.learning_rate);
            for i in 0..n {
                w[i] *= (-alpha * y[i].signed() * pred[i].signed()).exp();
            }
            let total: f64 = w.iter().sum();
            for wi in &mut w {
                *wi /= total;
            }
            weight_sums.push(w.iter().sum());
            stages.push(AdaStage { alpha, error, stump });
        }
        Ok(AdaBoost { stages, weight_sums })
    }

    pub fn decision(&self, row: RowView<'_>) -> f64 {
        self.stages.iter().map(|s| s.alpha * s.stump.predict_row(row).signed()).sum()
    }

    pub fn predict(&self, x: &SparseMatrix) -> Vec<Label> {
        x.rows().map(|r| Label::from(self.decision(r) > 0.0)).collect()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss of raw scores `f` against 0/1 targets.
pub(crate) fn logistic_loss(f: &[f64], y: &[f64]) -> f64 {
    let total: f64 = f
        .iter()
        .zip(y)
        .map(|(&fi, &yi)| {
            // ln(1 + e^f) − y f
            fi.max(0.0) + (-fi.abs()).exp().ln_1p() - yi * fi
        })
        .sum();
    total / f.len() as f64
}

/// Logistic-loss gradient boosting with squared-error regression trees and
/// Newton leaf values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Vec<Node>>,
    /// Training loss before round 1 and after each round.
    pub train_loss: Vec<f64>,
}

impl GradientBoosting {
    pub fn fit(x: &SparseMatrix, y: &[Label], p: &GradientBoostingParams) -> Result<Self, ModelError> {
        check_training(x, y)?;
        let n = y.len();
        let target: Vec<f64> = y.iter().map(|l| f64::from(l.as_u8())).collect();
        let pos = target.iter().sum::<f64>() / n as f64;
        let init = (pos / (1.0 - pos)).ln();
        let mut f = vec![init; n];
        let ones = vec![1.0; n];
        let gp = GrowParams {
            criterion: Criterion::SquaredError,
            max_depth: Some(p.max_depth),
            min_samples_split: p.min_samples_split,
            max_features: None,
        };
        let mut trees = Vec::with_capacity(p.n_estimators);
        let mut train_loss = vec![logistic_loss(&f, &target)];
        for _ in 0..p.n_estimators {
            let prob: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
            let resid: Vec<f64> = target.iter().zip(&prob).map(|(t, q)| t - q).collect();
            let mut newton = |rows: &[usize]| {
                let num: f64 = rows.iter().map(|&i| resid[i]).sum();
                let den: f64 = rows.iter().map(|&i| prob[i] * (1.0 - prob[i])).sum();
                if den.abs() < 1e-150 {
                    0.0
                } else {
                    num / den
                }
            };
            let nodes = TreeBuilder::new(x, &resid, &ones, &gp).grow(None, &mut newton);
            for (i, fi) in f.iter_mut().enumerate() {
                *fi += p.learning_rate * eval_nodes(&nodes, x.row(i));
            }
            train_loss.push(logistic_loss(&f, &target));
            trees.push(nodes);
        }
        Ok(GradientBoosting { init, learning_rate: p.learning_rate, trees, train_loss })
    }

    pub fn raw_score(&self, row: RowView<'_>) -> f64 {
        self.init + self.trees.iter().map(|t| self.learning_rate * eval_nodes(t, row)).sum::<f64>()
    }

    pub fn predict(&self, x: &SparseMatrix) -> Vec<Label> {
        x.rows().map(|r| Label::from(sigmoid(self.raw_score(r)) >= 0.5)).collect()
    }
}
