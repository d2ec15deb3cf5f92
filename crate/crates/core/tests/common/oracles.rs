//! Independent reference computations: exact rational arithmetic and
//! numerical differentiation, sharing no code with the library.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};

pub fn q(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn f(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

/// Metrics straight from the four formulas; `None` marks a zero denominator.
/// F1 is taken as 2TP/(2TP+FP+FN), algebraically equal to the harmonic mean.
pub struct MetricOracle {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn metric_oracle(tp: u64, fp: u64, tn: u64, fn_: u64) -> MetricOracle {
    let total = tp + fp + tn + fn_;
    let ratio = |n: u64, d: u64| (d > 0).then(|| f(&q(n, d)));
    MetricOracle {
        accuracy: f(&q(tp + tn, total)),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        f1: (tp > 0).then(|| f(&q(2 * tp, 2 * tp + fp + fn_))),
    }
}

/// Exact (p_o, p_e, kappa) for two binary raters; kappa `None` when p_e = 1.
pub fn kappa_oracle(a: &[u8], b: &[u8]) -> (BigRational, BigRational, Option<BigRational>) {
    let n = a.len() as u64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as u64;
    let a1 = a.iter().filter(|&&x| x == 1).count() as u64;
    let b1 = b.iter().filter(|&&x| x == 1).count() as u64;
    let p_o = q(agree, n);
    let p_e = q(a1, n) * q(b1, n) + q(n - a1, n) * q(n - b1, n);
    let one = q(1, 1);
    let kappa = (p_e != one).then(|| (&p_o - &p_e) / (&one - &p_e));
    (p_o, p_e, kappa)
}

/// Multinomial naive Bayes by direct probability products:
/// prior(c) · Π_t P(t|c)^count_t with Laplace smoothing `alpha = 1`.
/// Ties go to 0.
pub fn nb_oracle(docs: &[Vec<u64>], labels: &[u8], query: &[u64]) -> u8 {
    let v = query.len() as u64;
    let n = docs.len() as u64;
    let mut scores = Vec::new();
    for c in 0..2u8 {
        let members: Vec<&Vec<u64>> = docs.iter().zip(labels).filter(|(_, &l)| l == c).map(|(d, _)| d).collect();
        let mut counts = vec![0u64; query.len()];
        for d in &members {
            for (k, x) in d.iter().enumerate() {
                counts[k] += x;
            }
        }
        let total: u64 = counts.iter().sum();
        let mut score = q(members.len() as u64, n);
        for (t, &x) in query.iter().enumerate() {
            for _ in 0..x {
                score *= q(counts[t] + 1, total + v);
            }
        }
        scores.push(score);
    }
    u8::from(scores[1] > scores[0])
}

/// Count vectors over `v` terms with 1..=max_total tokens.
pub fn templates(v: usize, max_total: u64) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for _ in 0..v {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u64>| {
                (0..=max_total).map(move |x| {
                    let mut p = p.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out.retain(|p| {
        let s: u64 = p.iter().sum();
        s >= 1 && s <= max_total
    });
    out
}

pub struct NbCase {
    pub docs: Vec<Vec<u64>>,
    pub labels: Vec<u8>,
    pub queries: Vec<Vec<u64>>,
}

/// Small corpora drawn from the template set: vocabulary 1..=5 terms,
/// 2..=8 documents, both classes present. Every template, plus the empty
/// document, is used as a query.
pub fn nb_cases(count: usize, seed: u64) -> Vec<NbCase> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let v = 1 + i % 5;
            let t = templates(v, 3);
            let n = rng.random_range(2..=8);
            let docs: Vec<Vec<u64>> = (0..n).map(|_| t[rng.random_range(0..t.len())].clone()).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let mut queries = t.clone();
            queries.push(vec![0; v]);
            NbCase { docs, labels, queries }
        })
        .collect()
}

/// Central difference of `f` at `x` along every coordinate.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Relative error of `a` against `b`, with an absolute floor for near-zero vectors.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1.0);
    diff / scale
}

pub fn is_zero(r: &BigRational) -> bool {
    r.is_zero()
}
