//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p newsbench-core --test acceptance`. Tolerances and
//! time budgets are the constants below.

mod common;

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::oracles::*;
use newsbench_core::eval::{metrics, render_report, score_predictions, ConfusionMatrix, DegenerateFlag, ReportFormat, RenderOptions};
use newsbench_core::features::{build_vocabulary, featurize, tokenize, tokenize_all, SparseMatrix};
use newsbench_core::ingest::{self, consolidate, scrub_pii, ArticleOptions, ConsolidatedRecord, FeedSource, FeedsFile, IngestConfig};
use newsbench_core::labeling::{cohen_kappa, LabelError};
use newsbench_core::models::{
    import_external_predictions, stage_weight, train, write_predictions, AdaBoost, AdaBoostParams, DecisionTree, ForestParams,
    GradientBoosting, GradientBoostingParams, Hyperparameters, KindParams, LinearSgdParams, LogisticObjective, MaxFeatures,
    ModelKind, NaiveBayes, NbParams, NbVariant, PredictionRow, RandomForest, TreeParams,
};
use newsbench_core::pipeline::{run_benchmark, BenchmarkConfig};
use newsbench_core::synthetic::planted_corpus;
use newsbench_core::Label;
use rand::{Rng, SeedableRng};

const METRIC_TOL: f64 = 1e-12;
const METRIC_GRID_MAX: u64 = 20;
const METRIC_BUDGET: Duration = Duration::from_secs(10);
const KAPPA_EXAMPLE_TOL: f64 = 1e-9;
const KAPPA_RANDOM_PAIRS: usize = 1000;
const KAPPA_PROPERTY_TOL: f64 = 1e-12;
const NB_MIN_CASES: usize = 500;
const NB_CASES: usize = 600;
const GRADIENT_INSTANCES: usize = 100;
const GRADIENT_STEP: f64 = 1e-5;
const GRADIENT_TOL: f64 = 1e-5;
const SGD_MAX_EPOCHS: usize = 100;
const SGD_BUDGET: Duration = Duration::from_secs(1);
const ADA_TOL: f64 = 1e-12;
const ADA_WEIGHT_SUM_TOL: f64 = 1e-9;
const GB_SAMPLES: usize = 200;
const GB_ROUNDS: usize = 100;
const PIPELINE_BUDGET: Duration = Duration::from_secs(120);
const SIGNAL_DOCS: usize = 400;
const SIGNAL_MIN_F1: f64 = 0.9;
const PII_CASES: usize = 10_000;
const BENCHMARK_FIXTURES: usize = 7000;
const BENCHMARK_LIMIT: usize = 5000;
const TABLE_METRIC_TOL: f64 = 5e-5;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn labels(bits: &[u8]) -> Vec<Label> {
    bits.iter().map(|&b| Label::try_from(b).unwrap()).collect()
}

fn counts(rows: &[Vec<u64>]) -> SparseMatrix {
    SparseMatrix::from_dense(&rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect::<Vec<_>>())
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut cases = 0u64;
    for tp in 0..=METRIC_GRID_MAX {
        for fp in 0..=METRIC_GRID_MAX {
            for tn in 0..=METRIC_GRID_MAX {
                for fn_ in 0..=METRIC_GRID_MAX {
                    if tp + fp + tn + fn_ == 0 {
                        ensure(metrics(&ConfusionMatrix::new(0, 0, 0, 0), "m").is_err(), || "empty matrix accepted".into())?;
                        continue;
                    }
                    let r = metrics(&ConfusionMatrix::new(tp, fp, tn, fn_), "m").map_err(|e| e.to_string())?;
                    let o = metric_oracle(tp, fp, tn, fn_);
                    let close = |got: f64, want: Option<f64>| (got - want.unwrap_or(0.0)).abs() <= METRIC_TOL;
                    let flag = |fl: DegenerateFlag| r.degenerate_flags.contains(&fl);
                    ensure(
                        close(r.accuracy, Some(o.accuracy))
                            && close(r.precision, o.precision)
                            && close(r.recall, o.recall)
                            && close(r.f1, o.f1)
                            && flag(DegenerateFlag::PrecisionUndefined) == o.precision.is_none()
                            && flag(DegenerateFlag::RecallUndefined) == o.recall.is_none()
                            && flag(DegenerateFlag::F1Undefined) == o.f1.is_none(),
                        || format!("mismatch at tp={tp} fp={fp} tn={tn} fn={fn_}"),
                    )?;
                    cases += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < METRIC_BUDGET, || format!("{cases} cases took {elapsed:?}"))?;
    Ok(format!("{cases} matrices, tol {METRIC_TOL:e}, {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_2() -> Check {
    let a = labels(&[1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
    let b = labels(&[1, 1, 1, 1, 0, 1, 0, 0, 0, 0]);
    let r = cohen_kappa(&a, &b).map_err(|e| e.to_string())?;
    ensure((r.kappa - 0.6).abs() <= KAPPA_EXAMPLE_TOL && !r.passes_gate, || format!("10-item kappa {}", r.kappa))?;
    let same = labels(&[1, 0, 1, 1, 0]);
    let k1 = cohen_kappa(&same, &same).map_err(|e| e.to_string())?.kappa;
    ensure((k1 - 1.0).abs() <= KAPPA_EXAMPLE_TOL, || format!("identical vectors gave {k1}"))?;
    let constant = labels(&[1, 1, 1]);
    ensure(matches!(cohen_kappa(&constant, &constant), Err(LabelError::UndefinedKappa)), || "constant raters not undefined".into())?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for _ in 0..KAPPA_RANDOM_PAIRS {
        let n = rng.random_range(1..=50);
        let x: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let flip = |v: &[u8]| v.iter().map(|b| 1 - b).collect::<Vec<u8>>();
        let (_, _, exact) = kappa_oracle(&x, &y);
        let ab = cohen_kappa(&labels(&x), &labels(&y));
        let ba = cohen_kappa(&labels(&y), &labels(&x));
        let flipped = cohen_kappa(&labels(&flip(&x)), &labels(&flip(&y)));
        match (ab, ba, flipped, exact) {
            (Ok(ab), Ok(ba), Ok(fl), Some(k)) => {
                let want = f(&k);
                ensure(
                    (ab.kappa - ba.kappa).abs() <= KAPPA_PROPERTY_TOL
                        && (ab.kappa - fl.kappa).abs() <= KAPPA_PROPERTY_TOL
                        && (ab.kappa - want).abs() <= KAPPA_PROPERTY_TOL,
                    || format!("{x:?} vs {y:?}: {} {} {} oracle {want}", ab.kappa, ba.kappa, fl.kappa),
                )?;
                checked += 1;
            }
            (Err(LabelError::UndefinedKappa), Err(LabelError::UndefinedKappa), Err(LabelError::UndefinedKappa), None) => {}
            other => return Err(format!("{x:?} vs {y:?}: inconsistent results {other:?}")),
        }
    }
    Ok(format!("kappa {:.12}, {checked}/{KAPPA_RANDOM_PAIRS} defined random pairs symmetric and relabel-invariant", r.kappa))
}

fn criterion_3() -> Check {
    let cases = nb_cases(NB_CASES, 17);
    let mut queries = 0;
    for (i, case) in cases.iter().enumerate() {
        let model = NaiveBayes::fit(&counts(&case.docs), &labels(&case.labels), NbVariant::Multinomial, &NbParams::default())
            .map_err(|e| e.to_string())?;
        let got = model.predict(&counts(&case.queries));
        for (q, g) in case.queries.iter().zip(got) {
            let want = nb_oracle(&case.docs, &case.labels, q);
            ensure(g.as_u8() == want, || format!("case {i}, query {q:?}: model {g} oracle {want}"))?;
            queries += 1;
        }
    }
    ensure(cases.len() >= NB_MIN_CASES, || format!("only {} cases", cases.len()))?;
    Ok(format!("{} corpora (vocab <= 5, docs <= 8), {queries} queries, all exact", cases.len()))
}

fn criterion_4() -> Check {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..GRADIENT_INSTANCES {
        let n = rng.random_range(1..=20);
        let d = rng.random_range(1..=10);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-3.0..3.0) }).collect())
            .collect();
        let y: Vec<Label> = (0..n).map(|_| Label::from(rng.random_bool(0.5))).collect();
        let x = SparseMatrix::from_dense(&rows);
        let c = rng.random_range(0.1..5.0);
        let obj = LogisticObjective::new(&x, &y, c);
        let theta: Vec<f64> = (0..=d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, g) = obj.value_and_gradient(&theta);
        let fd = central_gradient(|t| obj.value(t), &theta, GRADIENT_STEP);
        let err = rel_error(&g, &fd);
        ensure(err <= GRADIENT_TOL, || format!("instance {i}: relative error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("{GRADIENT_INSTANCES} instances, worst relative error {worst:.2e} (tol {GRADIENT_TOL:e})"))
}

fn separable() -> (SparseMatrix, Vec<Label>) {
    (SparseMatrix::from_dense(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![3.0, 3.0], vec![4.0, 3.0]]), labels(&[0, 0, 1, 1]))
}

fn criterion_5() -> Check {
    let (x, y) = separable();
    let features = newsbench_core::features::FeatureSet {
        counts: x.clone(),
        tfidf: x,
        row_ids: (0..4).map(|i| i.to_string()).collect(),
    };
    let start = Instant::now();
    let mut first_perfect = None;
    for epochs in 1..=SGD_MAX_EPOCHS {
        let hp = Hyperparameters {
            params: KindParams::SgdHinge(LinearSgdParams { epochs, ..LinearSgdParams::default() }),
            seed: 7,
        };
        let model = train(&features, &y, &hp, "fixture").map_err(|e| e.to_string())?;
        if model.predict(&features).map_err(|e| e.to_string())? == y {
            first_perfect = Some(epochs);
            break;
        }
    }
    let elapsed = start.elapsed();
    let epochs = first_perfect.ok_or_else(|| format!("not separated within {SGD_MAX_EPOCHS} epochs"))?;
    ensure(elapsed < SGD_BUDGET, || format!("took {elapsed:?}"))?;
    ensure((LinearSgdParams::default().learning_rate - 0.01).abs() < 1e-15, || "default learning rate is not 0.01".into())?;
    Ok(format!("training accuracy 1.0 after {epochs} epoch(s) at lr 0.01, {:.3}s", elapsed.as_secs_f64()))
}

fn criterion_6() -> Check {
    let corpus = planted_corpus(GB_SAMPLES, 6);
    let toks = tokenize_all(&corpus.iter().map(|r| r.text.as_str()).collect::<Vec<_>>());
    let vocab = build_vocabulary(&toks, 2, None).map_err(|e| e.to_string())?;
    let fs = featurize(&toks, &vocab, corpus.iter().map(|r| r.id.clone()).collect());
    let y: Vec<Label> = corpus.iter().map(|r| r.label.unwrap()).collect();

    let tree = DecisionTree::fit(&fs.tfidf, &y, &TreeParams::default()).map_err(|e| e.to_string())?;
    let forest_params = ForestParams { n_trees: 1, bootstrap: false, max_features: MaxFeatures::All, ..ForestParams::default() };
    let forest = RandomForest::fit(&fs.tfidf, &y, &forest_params, 7).map_err(|e| e.to_string())?;
    // probe on rows the models did not see as well
    let probe_corpus = planted_corpus(100, 60);
    let probe_toks = tokenize_all(&probe_corpus.iter().map(|r| r.text.as_str()).collect::<Vec<_>>());
    let probe = featurize(&probe_toks, &vocab, probe_corpus.iter().map(|r| r.id.clone()).collect());
    for x in [&fs.tfidf, &probe.tfidf] {
        ensure(forest.predict(x) == tree.predict(x), || "1-tree forest differs from decision tree".into())?;
    }

    let gb = GradientBoosting::fit(
        &fs.tfidf,
        &y,
        &GradientBoostingParams { n_estimators: GB_ROUNDS, ..GradientBoostingParams::default() },
    )
    .map_err(|e| e.to_string())?;
    ensure(gb.train_loss.len() == GB_ROUNDS + 1, || format!("{} loss entries", gb.train_loss.len()))?;
    if let Some(w) = gb.train_loss.windows(2).position(|w| w[1] > w[0]) {
        return Err(format!("boosting loss rose at round {}: {} -> {}", w + 1, gb.train_loss[w], gb.train_loss[w + 1]));
    }

    let alpha = stage_weight(0.25, 1.0);
    let want = 0.5 * 3f64.ln();
    ensure((alpha - want).abs() <= ADA_TOL, || format!("stage weight {alpha} vs {want}"))?;
    let ada = AdaBoost::fit(&fs.tfidf, &y, &AdaBoostParams::default()).map_err(|e| e.to_string())?;
    ensure(ada.weight_sums.iter().all(|s| (s - 1.0).abs() <= ADA_WEIGHT_SUM_TOL), || "AdaBoost weights do not sum to 1".into())?;
    Ok(format!(
        "forest == tree on {} rows; boosting loss {:.4} -> {:.4} non-increasing over {GB_ROUNDS} rounds; alpha(0.25) = {alpha:.15}",
        fs.n_rows() + probe.n_rows(),
        gb.train_loss[0],
        gb.train_loss[GB_ROUNDS]
    ))
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = common::full_workflow(a.path());
    let second = common::full_workflow(b.path());
    let elapsed = start.elapsed();
    ensure(first.leaderboard_json == second.leaderboard_json, || "leaderboard JSON differs between runs".into())?;
    ensure(first.benchmark.leaderboard.rows.len() == ModelKind::ALL.len(), || "not every hub model was ranked".into())?;
    ensure(elapsed < PIPELINE_BUDGET, || format!("two runs took {elapsed:?}"))?;
    Ok(format!(
        "{} records exported, {} models, {} bytes identical across runs, {:.1}s for both",
        first.export.written,
        first.benchmark.leaderboard.rows.len(),
        first.leaderboard_json.len(),
        elapsed.as_secs_f64()
    ))
}

fn criterion_8() -> Check {
    let corpus = planted_corpus(SIGNAL_DOCS, 8);
    let run = run_benchmark(&corpus, &BenchmarkConfig::new(7)).map_err(|e| e.to_string())?;
    let mut checked = Vec::new();
    for row in &run.leaderboard.rows {
        let kind = ModelKind::ALL.iter().find(|k| k.display_name() == row.report.model_name).expect("known model");
        if kind.is_linear() || kind.is_naive_bayes() {
            ensure(row.report.f1 >= SIGNAL_MIN_F1, || format!("{} F1 {}", row.report.model_name, row.report.f1))?;
            checked.push(format!("{} {:.3}", kind.as_str(), row.report.f1));
        }
    }
    ensure(checked.len() == 5, || format!("checked {} linear/NB models", checked.len()))?;
    ensure(run.n_test == SIGNAL_DOCS / 5, || format!("test split has {} rows", run.n_test))?;
    let md = render_report(&run.leaderboard, ReportFormat::Markdown, &RenderOptions::default()).map_err(|e| e.to_string())?;
    ensure(md.contains("\n| Model | Accuracy | Precision | Recall | F1 Score |\n"), || "metrics table header missing".into())?;
    ensure(md.contains("## Confusion Matrix\n\n| Model | TP | FN | FP |"), || "confusion section missing".into())?;
    Ok(format!("F1 on {} test docs: {}", run.n_test, checked.join(", ")))
}

fn pii_case(rng: &mut impl Rng) -> String {
    const WORDS: [&str; 8] = ["vote", "Mayor", "said", "poll", "(", "count", "news,", "today."];
    const TLDS: [&str; 4] = ["com", "org", "co.uk", "news"];
    let name = |rng: &mut dyn rand::RngCore| {
        let len = rng.random_range(1..8);
        (0..len).map(|_| (b'a' + rng.random_range(0..26)) as char).collect::<String>()
    };
    let mut parts = Vec::new();
    for _ in 0..rng.random_range(1..8) {
        let part = match rng.random_range(0..6) {
            0 => format!("{}@{}.{}", name(rng), name(rng), TLDS[rng.random_range(0..TLDS.len())]),
            1 => format!("{}://{}.{}/{}", ["http", "https", "ftp"][rng.random_range(0..3)], name(rng), TLDS[rng.random_range(0..4)], name(rng)),
            2 => format!("www.{}.{}", name(rng), TLDS[rng.random_range(0..TLDS.len())]),
            3 => format!("@{}{}", name(rng), rng.random_range(0..100)),
            _ => WORDS[rng.random_range(0..WORDS.len())].to_string(),
        };
        parts.push(part);
    }
    let sep = [" ", " ", "\n", ", ", "("][rng.random_range(0..5)];
    parts.join(sep)
}

fn criterion_9() -> Check {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for _ in 0..PII_CASES {
        let raw = pii_case(&mut rng);
        let once = scrub_pii(&raw);
        ensure(scrub_pii(&once) == once, || format!("not idempotent on {raw:?}"))?;
        let lower = once.to_lowercase();
        ensure(!once.contains('@') && !once.contains("://") && !lower.contains("www."), || format!("residual PII in {once:?}"))?;
        ensure(tokenize(&once).iter().all(|t| !t.contains('@') && !t.contains("://")), || format!("bad token from {once:?}"))?;
    }

    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/three_items.rss");
    let feeds = FeedsFile {
        groups: vec![],
        feeds: vec![FeedSource { url: url::Url::from_file_path(&fixture).unwrap().to_string(), group: None }],
    };
    let window = IngestConfig::new("2024-01-01T00:00:00Z".parse().unwrap(), "2024-07-01T00:00:00Z".parse().unwrap());
    let (records, _) = ingest::ingest(&feeds, vec![], &window, &ArticleOptions::default(), Duration::from_secs(5))
        .map_err(|e| e.to_string())?;
    ensure(records.len() == 3, || format!("{} records from the 3-item feed", records.len()))?;
    let want_first = "Early turnout rose sharply in the county. Officials credited new polling sites. Mr. Alvarez said lines \
                      were short! Volunteers handed out water. Was the weather a factor?";
    ensure(records[0].text == want_first, || format!("first snippet {:?}", records[0].text))?;
    ensure(!records[1].text.contains("seventh"), || "second snippet kept a sixth sentence".into())?;

    let base: chrono::DateTime<chrono::Utc> = "2010-01-01T00:00:00Z".parse().unwrap();
    let n = BENCHMARK_FIXTURES;
    let bench: Vec<ConsolidatedRecord> = (0..n)
        .map(|i| {
            let minute = (i * 3001) % n;
            ConsolidatedRecord::new(format!("b{i}"), "bench", format!("benchmark item {i}"))
                .with_label(Label::Real)
                .with_published_at(base + chrono::Duration::minutes(minute as i64))
        })
        .collect();
    let mut cfg = window.clone();
    cfg.benchmark_limit = BENCHMARK_LIMIT;
    let (kept, _) = consolidate(&[], &bench, &cfg).map_err(|e| e.to_string())?;
    let expected: HashSet<String> =
        (0..n).filter(|i| (i * 3001) % n < BENCHMARK_LIMIT).map(|i| format!("b{i}")).collect();
    let got: HashSet<String> = kept.iter().map(|r| r.id.clone()).collect();
    ensure(kept.len() == BENCHMARK_LIMIT && got == expected, || format!("kept {} records, not the earliest", kept.len()))?;
    Ok(format!("{PII_CASES} fuzz cases clean and idempotent; 3 snippets; {BENCHMARK_LIMIT} earliest of {n} kept"))
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    // 72 TP, 8 FN, 5 FP, 15 TN
    let mut truth = HashMap::new();
    let mut rows = Vec::new();
    let blocks = [(Label::Fake, Label::Fake, 72), (Label::Fake, Label::Real, 8), (Label::Real, Label::Fake, 5), (Label::Real, Label::Real, 15)];
    for (t, p, count) in blocks {
        for _ in 0..count {
            let id = format!("rec-{:03}", truth.len());
            truth.insert(id.clone(), t);
            rows.push(PredictionRow { record_id: id, label: p });
        }
    }
    let path = dir.path().join("distilbert.jsonl");
    write_predictions(&path, "DistilBERT", &rows).map_err(|e| e.to_string())?;
    let ids: HashSet<String> = truth.keys().cloned().collect();
    let imported = import_external_predictions(&path, Some(&ids), true).map_err(|e| e.to_string())?;
    let report = score_predictions(&truth, &imported.rows, &imported.model_name).map_err(|e| e.to_string())?;
    let lb = newsbench_core::eval::leaderboard(vec![report.clone()]).map_err(|e| e.to_string())?;
    let md = render_report(&lb, ReportFormat::Markdown, &RenderOptions { include_tn: false, ..RenderOptions::default() })
        .map_err(|e| e.to_string())?;
    ensure(md.contains("\n| DistilBERT | 72% | 8% | 5% |\n"), || format!("confusion row not found in:\n{md}"))?;
    let want = [(report.accuracy, 0.87), (report.precision, 0.9351), (report.recall, 0.90), (report.f1, 0.9172)];
    ensure(want.iter().all(|(g, w)| (g - w).abs() <= TABLE_METRIC_TOL), || format!("metrics {want:?}"))?;
    Ok(format!(
        "row \"72%, 8%, 5%\"; accuracy {:.4} precision {:.4} recall {:.4} F1 {:.4}",
        report.accuracy, report.precision, report.recall, report.f1
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("metric oracle equivalence", criterion_1),
        ("kappa oracle", criterion_2),
        ("naive Bayes brute-force equivalence", criterion_3),
        ("logistic gradient vs finite differences", criterion_4),
        ("separable hinge convergence", criterion_5),
        ("ensemble reductions", criterion_6),
        ("pipeline determinism", criterion_7),
        ("end-to-end planted signal", criterion_8),
        ("scrub and ingest properties", criterion_9),
        ("external prediction import", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
