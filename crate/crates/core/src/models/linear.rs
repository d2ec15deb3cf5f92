use std::collections::VecDeque;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training, LinearSgdParams, LogisticParams, ModelError};
use crate::features::{RowView, SparseMatrix};
use crate::{rng, Label};

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearLoss {
    Log,
    Hinge,
    SquaredHinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SgdLoss {
    Hinge,
    SquaredHinge,
}

/// `decision(x) = w·x + b`; positive decisions predict label 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub loss: LinearLoss,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// L-BFGS iterations or SGD epochs run.
    pub iterations: usize,
    /// Final gradient norm for log loss.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_norm: Option<f64>,
}

fn signed(y: &[Label]) -> Vec<f64> {
    y.iter().map(|l| l.signed()).collect()
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `f(w, b) = ½‖w‖² + C · Σᵢ ln(1 + exp(−yᵢ (w·xᵢ + b)))`, with `yᵢ ∈ {−1, +1}`
/// and the bias unregularized. Parameters are packed as `[w…, b]`.
pub struct LogisticObjective<'a> {
    x: &'a SparseMatrix,
    y: Vec<f64>,
    c: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(x: &'a SparseMatrix, y: &[Label], c: f64) -> Self {
        LogisticObjective { x, y: signed(y), c }
    }

    pub fn dim(&self) -> usize {
        self.x.n_cols() + 1
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.value_and_gradient(theta).0
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let d = self.x.n_cols();
        let (w, b) = (&theta[..d], theta[d]);
        let mut grad: Vec<f64> = w.to_vec();
        grad.push(0.0);
        let mut value = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        for (row, &yi) in self.x.rows().zip(&self.y) {
            let margin = yi * (row.dot(w) + b);
            value += self.c * softplus(-margin);
            // d/dz softplus(−y z) = −y σ(−y z)
            let g = -self.c * yi * sigmoid(-margin);
            for (j, v) in row.iter() {
                grad[j] += g * v;
            }
            grad[d] += g;
        }
        (value, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Limited-memory BFGS with backtracking Armijo line search.
/// Returns `(theta, iterations, final gradient norm)`.
fn lbfgs(obj: &LogisticObjective<'_>, max_iter: usize, tol: f64) -> (Vec<f64>, usize, f64) {
    let n = obj.dim();
    let mut theta = vec![0.0; n];
    let (mut f, mut g) = obj.value_and_gradient(&theta);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iter = 0;
    while iter < max_iter && norm(&g) > tol {
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = history.back().map_or(1.0 / norm(&g).max(1.0), |(s, yv, _)| dot(s, yv) / dot(yv, yv));
        for qi in &mut q {
            *qi *= gamma;
        }
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - beta) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            // not a descent direction; restart from steepest descent
            history.clear();
            dir = g.iter().map(|v| -v / norm(&g).max(1.0)).collect();
            slope = dot(&g, &dir);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let (fc, gc) = obj.value_and_gradient(&cand);
            if fc <= f + ARMIJO_C1 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else { break };
        let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * norm(&s) * norm(&yv) {
            if history.len() == LBFGS_MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        theta = cand;
        f = fc;
        g = gc;
        iter += 1;
    }
    let gn = norm(&g);
    (theta, iter, gn)
}

impl LinearModel {
    pub fn fit_logistic(x: &SparseMatrix, y: &[Label], p: &LogisticParams) -> Result<Self, ModelError> {
        check_training(x, y)?;
        let obj = LogisticObjective::new(x, y, p.c);
        let (theta, iterations, gn) = lbfgs(&obj, p.max_iter, p.tol);
        let d = x.n_cols();
        Ok(LinearModel { loss: LinearLoss::Log, weights: theta[..d].to_vec(), bias: theta[d], iterations, grad_norm: Some(gn) })
    }

    /// Per-sample subgradient descent on `½‖w‖²/n + C · loss(yᵢ, w·xᵢ + b)`
    /// over epoch-wise seeded shuffles.
    pub(crate) fn fit_sgd(
        x: &SparseMatrix,
        y: &[Label],
        loss: SgdLoss,
        p: &LinearSgdParams,
        seed: u64,
    ) -> Result<Self, ModelError> {
        check_training(x, y)?;
        let ys = signed(y);
        let n = ys.len();
        let d = x.n_cols();
        // w = scale · v, so the shrink step is O(1)
        let mut v = vec![0.0; d];
        let mut scale = 1.0;
        let mut bias = 0.0;
        let shrink = 1.0 - p.learning_rate / n as f64;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = rng::seeded(seed);
        for _ in 0..p.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let row = x.row(i);
                let z = scale * row.dot(&v) + bias;
                let slack = 1.0 - ys[i] * z;
                // derivative of the loss with respect to z
                let dz = match loss {
                    SgdLoss::Hinge if slack > 0.0 => -ys[i],
                    SgdLoss::SquaredHinge if slack > 0.0 => -2.0 * ys[i] * slack,
                    _ => 0.0,
                };
                scale *= shrink;
                if dz != 0.0 {
                    let step = p.learning_rate * p.c * dz;
                    for (j, xv) in row.iter() {
                        v[j] -= step * xv / scale;
                    }
                    bias -= step;
                }
                if scale < 1e-9 {
                    for vj in &mut v {
                        *vj *= scale;
                    }
                    scale = 1.0;
                }
            }
        }
        let weights = v.iter().map(|vj| vj * scale).collect();
        let loss = match loss {
            SgdLoss::Hinge => LinearLoss::Hinge,
            SgdLoss::SquaredHinge => LinearLoss::SquaredHinge,
        };
        Ok(LinearModel { loss, weights, bias, iterations: p.epochs, grad_norm: None })
    }

    pub fn decision(&self, row: RowView<'_>) -> f64 {
        row.dot(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &SparseMatrix) -> Vec<Label> {
        x.rows().map(|r| Label::from(self.decision(r) > 0.0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(b: u8) -> Label {
        Label::try_from(b).unwrap()
    }

    fn separable() -> (SparseMatrix, Vec<Label>) {
        let x = SparseMatrix::from_dense(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![3.0, 3.0], vec![4.0, 3.0]]);
        (x, vec![l(0), l(0), l(1), l(1)])
    }

    #[test]
    fn bias_gradient_zero_at_origin_when_balanced() {
        let (x, y) = separable();
        let obj = LogisticObjective::new(&x, &y, 1.0);
        let (_, g) = obj.value_and_gradient(&[0.0, 0.0, 0.0]);
        assert!(g[2].abs() < 1e-15);
    }

    #[test]
    fn logistic_reaches_tolerance_and_separates() {
        let (x, y) = separable();
        let m = LinearModel::fit_logistic(&x, &y, &LogisticParams::default()).unwrap();
        assert!(m.grad_norm.unwrap() <= 1e-6, "{:?}", m.grad_norm);
        assert_eq!(m.predict(&x), y);
    }

    #[test]
    fn hinge_separates_fixture() {
        let (x, y) = separable();
        for loss in [SgdLoss::Hinge, SgdLoss::SquaredHinge] {
            let m = LinearModel::fit_sgd(&x, &y, loss, &LinearSgdParams::default(), 7).unwrap();
            assert_eq!(m.predict(&x), y, "{loss:?}");
        }
    }

    #[test]
    fn all_zero_features_give_constant_predictions() {
        let x = SparseMatrix::from_dense(&vec![vec![0.0, 0.0]; 5]);
        let y = vec![l(1), l(0), l(1), l(1), l(0)];
        let m = LinearModel::fit_sgd(&x, &y, SgdLoss::Hinge, &LinearSgdParams::default(), 1).unwrap();
        let p = m.predict(&x);
        assert!(p.iter().all(|&v| v == p[0]));
        assert!(m.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, y) = separable();
        let a = LinearModel::fit_sgd(&x, &y, SgdLoss::Hinge, &LinearSgdParams::default(), 3).unwrap();
        let b = LinearModel::fit_sgd(&x, &y, SgdLoss::Hinge, &LinearSgdParams::default(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_rejected() {
        let x = SparseMatrix::from_dense(&[vec![f64::NAN], vec![1.0]]);
        assert!(matches!(
            LinearModel::fit_logistic(&x, &[l(0), l(1)], &LogisticParams::default()),
            Err(ModelError::Input(_))
        ));
    }
}
