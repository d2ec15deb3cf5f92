use serde::{Deserialize, Serialize};

use super::tree::{Criterion, GrowParams};
use super::{check_training, DecisionTree, ForestParams, ModelError};
use crate::features::SparseMatrix;
use crate::{par, rng, Label};
use rand::Rng;

/// Bagged gini trees with per-split feature sampling, majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Tree `t` draws from its own derived stream, so trees can be grown in
    /// any order (or in parallel) with identical results.
    pub fn fit(x: &SparseMatrix, y: &[Label], p: &ForestParams, seed: u64) -> Result<Self, ModelError> {
        check_training(x, y)?;
        let n = y.len();
        let gp = GrowParams {
            criterion: Criterion::Gini,
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            max_features: p.max_features.resolve(x.n_cols()),
        };
        let trees = par::map_range(p.n_trees, |t| {
            let mut rng = rng::derived(seed, t as u64);
            let weight = if p.bootstrap {
                let mut counts = vec![0.0; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1.0;
                }
                counts
            } else {
                vec![1.0; n]
            };
            DecisionTree::fit_weighted(x, y, &weight, &gp, Some(&mut rng))
        });
        Ok(RandomForest { trees })
    }

    pub fn predict(&self, x: &SparseMatrix) -> Vec<Label> {
        x.rows()
            .map(|row| {
                let fakes = self.trees.iter().filter(|t| t.predict_row(row).is_fake()).count();
                Label::from(2 * fakes > self.trees.len())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{MaxFeatures, TreeParams};

    fn data() -> (SparseMatrix, Vec<Label>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..40u32 {
            let a = (i % 7) as f64;
            let b = ((i * 3) % 5) as f64;
            let c = if i % 4 == 0 { 0.0 } else { (i % 3) as f64 * 0.5 };
            rows.push(vec![a, b, c, (i % 2) as f64]);
            y.push(Label::from(a + b > 4.0 || c > 0.9));
        }
        (SparseMatrix::from_dense(&rows), y)
    }

    #[test]
    fn single_full_tree_equals_decision_tree() {
        let (x, y) = data();
        let p = ForestParams { n_trees: 1, bootstrap: false, max_features: MaxFeatures::All, ..Default::default() };
        let f = RandomForest::fit(&x, &y, &p, 11).unwrap();
        let t = DecisionTree::fit(&x, &y, &TreeParams::default()).unwrap();
        assert_eq!(f.trees[0], t);
        assert_eq!(f.predict(&x), t.predict(&x));
    }

    #[test]
    fn seeded_and_order_independent() {
        let (x, y) = data();
        let p = ForestParams { n_trees: 8, ..Default::default() };
        let a = RandomForest::fit(&x, &y, &p, 5).unwrap();
        let b = RandomForest::fit(&x, &y, &p, 5).unwrap();
        assert_eq!(a, b);
        let c = RandomForest::fit(&x, &y, &p, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn vote_tie_goes_to_zero() {
        let leaf = |v: f64| DecisionTree { nodes: vec![crate::models::Node::Leaf { value: v }] };
        let f = RandomForest { trees: vec![leaf(1.0), leaf(0.0)] };
        assert_eq!(f.predict(&SparseMatrix::from_dense(&[vec![1.0]])), vec![Label::Real]);
    }
}
