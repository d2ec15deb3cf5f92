mod common;

use common::oracles::*;
use newsbench_core::eval::{metrics, ConfusionMatrix, DegenerateFlag};
use newsbench_core::features::{build_vocabulary, tfidf, tokenize_all, SparseMatrix};
use newsbench_core::labeling::{cohen_kappa, LabelError};
use newsbench_core::models::{LogisticObjective, NaiveBayes, NbParams, NbVariant};
use newsbench_core::Label;
use rand::{Rng, SeedableRng};

fn labels(bits: &[u8]) -> Vec<Label> {
    bits.iter().map(|&b| Label::try_from(b).unwrap()).collect()
}

fn dense(rows: &[Vec<u64>]) -> SparseMatrix {
    SparseMatrix::from_dense(&rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect::<Vec<_>>())
}

#[test]
fn metrics_match_formulas_on_small_grid() {
    for tp in 0..=8 {
        for fp in 0..=8 {
            for tn in 0..=8 {
                for fn_ in 0..=8 {
                    if tp + fp + tn + fn_ == 0 {
                        continue;
                    }
                    let r = metrics(&ConfusionMatrix::new(tp, fp, tn, fn_), "m").unwrap();
                    let o = metric_oracle(tp, fp, tn, fn_);
                    assert!((r.accuracy - o.accuracy).abs() <= 1e-12);
                    assert!((r.precision - o.precision.unwrap_or(0.0)).abs() <= 1e-12);
                    assert!((r.recall - o.recall.unwrap_or(0.0)).abs() <= 1e-12);
                    assert!((r.f1 - o.f1.unwrap_or(0.0)).abs() <= 1e-12);
                    assert_eq!(r.degenerate_flags.contains(&DegenerateFlag::PrecisionUndefined), o.precision.is_none());
                    assert_eq!(r.degenerate_flags.contains(&DegenerateFlag::RecallUndefined), o.recall.is_none());
                    assert_eq!(r.degenerate_flags.contains(&DegenerateFlag::F1Undefined), o.f1.is_none());
                }
            }
        }
    }
}

#[test]
fn kappa_matches_exact_arithmetic() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.random_range(1..40);
        let a: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let b: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let (p_o, p_e, kappa) = kappa_oracle(&a, &b);
        match (cohen_kappa(&labels(&a), &labels(&b)), kappa) {
            (Ok(r), Some(k)) => {
                assert!((r.p_o - f(&p_o)).abs() <= 1e-12);
                assert!((r.p_e - f(&p_e)).abs() <= 1e-12);
                assert!((r.kappa - f(&k)).abs() <= 1e-12);
            }
            (Err(LabelError::UndefinedKappa), None) => {}
            (got, want) => panic!("{a:?} {b:?}: {got:?} vs {want:?}"),
        }
    }
}

#[test]
fn multinomial_nb_matches_posterior_enumeration() {
    for (i, case) in nb_cases(300, 5).iter().enumerate() {
        let model =
            NaiveBayes::fit(&dense(&case.docs), &labels(&case.labels), NbVariant::Multinomial, &NbParams::default()).unwrap();
        let got = model.predict(&dense(&case.queries));
        for (query, g) in case.queries.iter().zip(got) {
            assert_eq!(g.as_u8(), nb_oracle(&case.docs, &case.labels, query), "case {i} query {query:?}");
        }
    }
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.random_range(2..=20);
        let d = rng.random_range(1..=10);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| if rng.random_bool(0.4) { 0.0 } else { rng.random_range(-2.0..2.0) }).collect()).collect();
        let y: Vec<Label> = (0..n).map(|_| Label::from(rng.random_bool(0.5))).collect();
        let x = SparseMatrix::from_dense(&rows);
        let obj = LogisticObjective::new(&x, &y, 1.0);
        let theta: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, g) = obj.value_and_gradient(&theta);
        let fd = central_gradient(|t| obj.value(t), &theta, 1e-5);
        assert!(rel_error(&g, &fd) <= 1e-5, "{}", rel_error(&g, &fd));
    }
}

#[test]
fn tfidf_two_document_example() {
    let toks = tokenize_all(&["vote fraud fraud", "vote count"]);
    let vocab = build_vocabulary(&toks, 1, None).unwrap();
    let m = tfidf(&toks, &vocab);
    let idf_rare = (3.0f64 / 2.0).ln() + 1.0;
    let (w_vote, w_fraud) = (1.0, 2.0 * idf_rare);
    let norm = (w_vote * w_vote + w_fraud * w_fraud).sqrt();
    let col = |t: &str| vocab.index_of(t).unwrap() as usize;
    assert!((m.get(0, col("vote")) - w_vote / norm).abs() < 1e-12);
    assert!((m.get(0, col("fraud")) - w_fraud / norm).abs() < 1e-12);
    assert_eq!(m.get(0, col("count")), 0.0);
    assert!((m.get(0, col("vote")) - 0.3352).abs() < 5e-5 && (m.get(0, col("fraud")) - 0.9422).abs() < 5e-5);
}
