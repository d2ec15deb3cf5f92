//! Rayon thread pool against a single-thread pool on the data-parallel paths.
//!
//! `cargo bench -p newsbench-core --bench parallel`. Build with
//! `--no-default-features` to time the sequential fallback code path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use newsbench_core::features::{build_vocabulary, featurize, tokenize_all, FeatureSet};
use newsbench_core::models::{ForestParams, Knn, KnnParams, RandomForest};
use newsbench_core::pipeline::{run_benchmark, BenchmarkConfig};
use newsbench_core::synthetic::planted_corpus;
use newsbench_core::Label;

fn data(n: usize) -> (Vec<String>, FeatureSet, Vec<Label>) {
    let corpus = planted_corpus(n, 1);
    let texts: Vec<String> = corpus.iter().map(|r| r.text.clone()).collect();
    let toks = tokenize_all(&texts);
    let vocab = build_vocabulary(&toks, 2, None).unwrap();
    let fs = featurize(&toks, &vocab, corpus.iter().map(|r| r.id.clone()).collect());
    (texts, fs, corpus.iter().map(|r| r.label.unwrap()).collect())
}

#[cfg(feature = "parallel")]
fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    vec![
        ("rayon", rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()),
        ("one_thread", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
    ]
}

#[cfg(feature = "parallel")]
fn run<R>(pool: &rayon::ThreadPool, f: impl FnOnce() -> R + Send) -> R
where
    R: Send,
{
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
struct Sequential;

#[cfg(not(feature = "parallel"))]
fn pools() -> Vec<(&'static str, Sequential)> {
    vec![("sequential", Sequential)]
}

#[cfg(not(feature = "parallel"))]
fn run<R>(_: &Sequential, f: impl FnOnce() -> R) -> R {
    f()
}

fn bench(c: &mut Criterion) {
    let (texts, fs, y) = data(2000);
    let corpus = planted_corpus(400, 2);
    let knn = Knn::fit(&fs.tfidf, &y, &KnnParams::default()).unwrap();
    let forest = ForestParams { n_trees: 50, ..ForestParams::default() };
    let mut cfg = BenchmarkConfig::new(7);
    cfg.kinds.retain(|k| !matches!(k, newsbench_core::models::ModelKind::GradientBoosting));

    for (name, pool) in pools() {
        c.bench_with_input(BenchmarkId::new("tokenize", name), &texts, |b, t| b.iter(|| run(&pool, || tokenize_all(t))));
        c.bench_with_input(BenchmarkId::new("forest_fit", name), &fs, |b, fs| {
            b.iter(|| run(&pool, || RandomForest::fit(&fs.tfidf, &y, &forest, 3).unwrap()))
        });
        c.bench_with_input(BenchmarkId::new("knn_predict", name), &fs, |b, fs| b.iter(|| run(&pool, || knn.predict(&fs.tfidf))));
        c.bench_with_input(BenchmarkId::new("hub_benchmark", name), &corpus, |b, corpus| {
            b.iter(|| run(&pool, || run_benchmark(corpus, &cfg).unwrap()))
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench
}
criterion_main!(benches);
