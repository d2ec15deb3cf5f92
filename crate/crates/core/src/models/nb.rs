use serde::{Deserialize, Serialize};

use super::{check_training, ModelError, NbParams};
use crate::features::{RowView, SparseMatrix};
use crate::Label;

/// Relative slack under which two class scores count as tied (→ label 0).
/// Exact ties in real arithmetic can differ by a few ulps after summing logs.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NbVariant {
    /// Term counts, Laplace-smoothed per class.
    Multinomial,
    /// Term presence (`x > 0`), absent terms contribute `ln(1 − θ)`.
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub variant: NbVariant,
    /// `ln P(class)`, indexed by label.
    pub log_prior: [f64; 2],
    /// `ln θ[class][term]`.
    pub log_prob: [Vec<f64>; 2],
    /// `ln(1 − θ[class][term])`, Bernoulli only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_neg_prob: Option<[Vec<f64>; 2]>,
}

impl NaiveBayes {
    pub fn fit(x: &SparseMatrix, y: &[Label], variant: NbVariant, p: &NbParams) -> Result<Self, ModelError> {
        check_training(x, y)?;
        if p.alpha.is_nan() || p.alpha <= 0.0 {
            return Err(ModelError::Config("alpha must be positive".into()));
        }
        let d = x.n_cols();
        let mut n_class = [0usize; 2];
        // per-class term totals: counts (multinomial) or document frequency (bernoulli)
        let mut totals = [vec![0.0; d], vec![0.0; d]];
        for (row, label) in x.rows().zip(y) {
            let c = label.index();
            n_class[c] += 1;
            for (j, v) in row.iter() {
                totals[c][j] += match variant {
                    NbVariant::Multinomial => v,
                    NbVariant::Bernoulli => f64::from(u8::from(v > 0.0)),
                };
            }
        }
        let n = y.len() as f64;
        let log_prior = if p.fit_prior {
            [(n_class[0] as f64 / n).ln(), (n_class[1] as f64 / n).ln()]
        } else {
            [0.5f64.ln(); 2]
        };
        let theta = |c: usize, j: usize| match variant {
            NbVariant::Multinomial => {
                let denom: f64 = totals[c].iter().sum::<f64>() + p.alpha * d as f64;
                (totals[c][j] + p.alpha) / denom
            }
            NbVariant::Bernoulli => (totals[c][j] + p.alpha) / (n_class[c] as f64 + 2.0 * p.alpha),
        };
        let log_prob = [0, 1].map(|c| (0..d).map(|j| theta(c, j).ln()).collect::<Vec<_>>());
        let log_neg_prob = (variant == NbVariant::Bernoulli)
            .then(|| [0, 1].map(|c| (0..d).map(|j| (1.0 - theta(c, j)).ln()).collect::<Vec<_>>()));
        Ok(NaiveBayes { variant, log_prior, log_prob, log_neg_prob })
    }

    /// Joint log-likelihood `ln P(c) + ln P(x | c)` for both classes.
    pub fn log_scores(&self, row: RowView<'_>) -> [f64; 2] {
        [0, 1].map(|c| {
            let mut s = self.log_prior[c];
            match &self.log_neg_prob {
                None => {
                    for (j, v) in row.iter() {
                        s += v * self.log_prob[c][j];
                    }
                }
                Some(neg) => {
                    s += neg[c].iter().sum::<f64>();
                    for (j, v) in row.iter() {
                        if v > 0.0 {
                            s += self.log_prob[c][j] - neg[c][j];
                        }
                    }
                }
            }
            s
        })
    }

    pub fn predict_row(&self, row: RowView<'_>) -> Label {
        let [s0, s1] = self.log_scores(row);
        let scale = s0.abs().max(s1.abs()).max(1.0);
        Label::from(s1 - s0 > TIE_TOLERANCE * scale)
    }

    pub fn predict(&self, x: &SparseMatrix) -> Vec<Label> {
        x.rows().map(|r| self.predict_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(b: u8) -> Label {
        Label::try_from(b).unwrap()
    }

    // vocab order: fake, news, real
    #[test]
    fn worked_multinomial_example() {
        let x = SparseMatrix::from_dense(&[vec![2.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]);
        let m = NaiveBayes::fit(&x, &[l(1), l(0)], NbVariant::Multinomial, &NbParams::default()).unwrap();
        let th1: Vec<f64> = m.log_prob[1].iter().map(|v| v.exp()).collect();
        let th0: Vec<f64> = m.log_prob[0].iter().map(|v| v.exp()).collect();
        for (got, want) in th1.iter().zip([3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in th0.iter().zip([1.0 / 5.0, 2.0 / 5.0, 2.0 / 5.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let q = SparseMatrix::from_dense(&[vec![1.0, 1.0, 0.0]]);
        let [s0, s1] = m.log_scores(q.row(0));
        assert!((s1.exp() - 0.5 * 0.5 * (1.0 / 3.0)).abs() < 1e-12);
        assert!((s0.exp() - 0.5 * 0.2 * 0.4).abs() < 1e-12);
        assert_eq!(m.predict(&q), vec![Label::Fake]);
    }

    #[test]
    fn oov_tie_goes_to_real() {
        let x = SparseMatrix::from_dense(&[vec![2.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]);
        let m = NaiveBayes::fit(&x, &[l(1), l(0)], NbVariant::Multinomial, &NbParams::default()).unwrap();
        assert_eq!(m.predict(&SparseMatrix::from_dense(&[vec![0.0; 3]])), vec![Label::Real]);
    }

    #[test]
    fn single_class_is_error() {
        let x = SparseMatrix::from_dense(&[vec![1.0], vec![2.0]]);
        assert!(matches!(
            NaiveBayes::fit(&x, &[l(1), l(1)], NbVariant::Multinomial, &NbParams::default()),
            Err(ModelError::Training(_))
        ));
    }

    #[test]
    fn bernoulli_matches_direct_product() {
        let x = SparseMatrix::from_dense(&[vec![3.0, 0.0, 1.0], vec![1.0, 1.0, 0.0], vec![0.0, 2.0, 1.0]]);
        let y = [l(1), l(1), l(0)];
        let m = NaiveBayes::fit(&x, &y, NbVariant::Bernoulli, &NbParams::default()).unwrap();
        // class 1: 2 docs, presence counts [2,1,1]; class 0: 1 doc, [0,1,1]
        let th1 = [3.0 / 4.0, 2.0 / 4.0, 2.0 / 4.0];
        let th0 = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        let q = [1.0, 0.0, 5.0];
        let direct = |th: &[f64; 3], prior: f64| {
            prior * (0..3).map(|j| if q[j] > 0.0 { th[j] } else { 1.0 - th[j] }).product::<f64>()
        };
        let [s0, s1] = m.log_scores(SparseMatrix::from_dense(&[q.to_vec()]).row(0));
        assert!((s1.exp() - direct(&th1, 2.0 / 3.0)).abs() < 1e-12);
        assert!((s0.exp() - direct(&th0, 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn uniform_prior_when_not_fitted() {
        let x = SparseMatrix::from_dense(&[vec![1.0], vec![1.0], vec![1.0]]);
        let p = NbParams { fit_prior: false, ..Default::default() };
        let m = NaiveBayes::fit(&x, &[l(1), l(1), l(0)], NbVariant::Multinomial, &p).unwrap();
        assert_eq!(m.log_prior, [0.5f64.ln(); 2]);
    }
}
