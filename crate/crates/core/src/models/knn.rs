use serde::{Deserialize, Serialize};

use super::{check_training, KnnParams, ModelError};
use crate::features::{RowView, SparseMatrix};
use crate::{par, Label};

/// Brute-force k-nearest neighbours on Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub rows: SparseMatrix,
    pub labels: Vec<Label>,
}

impl Knn {
    pub fn fit(x: &SparseMatrix, y: &[Label], p: &KnnParams) -> Result<Self, ModelError> {
        check_training(x, y)?;
        if p.k == 0 || p.k > y.len() {
            return Err(ModelError::Input(format!("k = {} must lie in 1..={}", p.k, y.len())));
        }
        Ok(Knn { k: p.k, rows: x.clone(), labels: y.to_vec() })
    }

    /// Indices of the `k` nearest training rows, nearest first; equal
    /// distances go to the lower row index.
    pub fn neighbors(&self, query: RowView<'_>) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self.rows.rows().enumerate().map(|(i, r)| (query.dist_sq(&r), i)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Majority label among the neighbours, vote ties to 0.
    pub fn predict_row(&self, query: RowView<'_>) -> Label {
        let nb = self.neighbors(query);
        let fakes = nb.iter().filter(|&&i| self.labels[i].is_fake()).count();
        Label::from(2 * fakes > nb.len())
    }

    pub fn predict(&self, x: &SparseMatrix) -> Vec<Label> {
        par::map_range(x.n_rows(), |i| self.predict_row(x.row(i)))
    }
}
