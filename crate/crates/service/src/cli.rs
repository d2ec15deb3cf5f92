//! `newsbench` subcommands.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use newsbench_core::eval::{render_report, RenderOptions, ReportFormat};
use newsbench_core::ingest::{read_corpus, write_csv};
use newsbench_core::jsonl;
use newsbench_core::labeling::{
    apply_scripted_reviews, export_labeled_corpus, qc_sample, Annotator, ExportOptions, GateReport, ScriptedDecision,
    WorkflowStore,
};
use newsbench_core::models::{write_predictions, ModelKind, TrainedModel};
use newsbench_core::pipeline::{predict_records, run_benchmark, BenchmarkConfig};
use newsbench_core::synthetic::write_workflow_fixture;
use newsbench_core::Label;

use crate::config::{LlmConfig, ServiceConfig};
use crate::tasks::{self, EvaluateParams, IngestParams, TrainParams, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "newsbench", version, about = "Fake-news corpus building, labeling and model benchmarking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch feeds, merge with a benchmark corpus and write the consolidated corpus.
    Ingest(IngestArgs),
    /// Labeling workflow on a journal-backed store.
    #[command(subcommand)]
    Label(LabelCommand),
    /// Fit one model on a labeled corpus.
    Train(TrainArgs),
    /// Predict a corpus with a saved model.
    Predict(PredictArgs),
    /// Score prediction files against a labeled corpus.
    Evaluate(EvaluateArgs),
    /// Split a labeled corpus, train every model and rank them.
    Benchmark(BenchmarkArgs),
    /// Write a small synthetic feed, benchmark and review fixture.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// TOML file listing feeds and keyword groups.
    #[arg(long)]
    feeds: PathBuf,
    /// Labeled benchmark corpus (JSON Lines).
    #[arg(long)]
    benchmark: Option<PathBuf>,
    #[arg(long)]
    window_start: DateTime<Utc>,
    #[arg(long)]
    window_end: DateTime<Utc>,
    /// Keep at most this many benchmark records.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    max_sentences: Option<usize>,
    /// Use titles for entries without body text.
    #[arg(long)]
    title_fallback: bool,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    /// Output corpus (JSON Lines).
    #[arg(long)]
    out: PathBuf,
    /// Also write a CSV copy.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StoreArg {
    /// Directory holding the workflow journal.
    #[arg(long, env = "NEWSBENCH_STORE_DIR")]
    store: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum LabelCommand {
    /// Add corpus records to the store.
    Import {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Register annotators from a JSON Lines file.
    Annotators {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long)]
        file: PathBuf,
    },
    /// Ask a language model for provisional labels on unsuggested records.
    Suggest {
        #[command(flatten)]
        store: StoreArg,
        /// Canned responses instead of a live endpoint.
        #[arg(long, env = "NEWSBENCH_LLM_STUB")]
        stub: Option<PathBuf>,
        #[arg(long, env = "NEWSBENCH_LLM_BASE_URL")]
        base_url: Option<String>,
        #[arg(long, env = "NEWSBENCH_LLM_MODEL")]
        model: Option<String>,
        /// Prompt template with a `{text}` placeholder.
        #[arg(long)]
        prompt: Option<PathBuf>,
    },
    /// Show or hide suggestions to reviewers.
    Visibility {
        #[command(flatten)]
        store: StoreArg,
        #[arg(value_parser = ["on", "off"])]
        state: String,
    },
    /// Give every unassigned record to two reviewers.
    Assign {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Submit one review, or apply a JSON Lines script of decisions.
    Review {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, required_unless_present = "script", requires = "label")]
        assignment: Option<String>,
        #[arg(long, value_parser = parse_label)]
        label: Option<Label>,
        #[arg(long)]
        note: Option<String>,
        #[arg(long, conflicts_with = "assignment")]
        script: Option<PathBuf>,
    },
    /// Third review on an open disagreement.
    Tiebreak {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long)]
        record: String,
        #[arg(long)]
        annotator: String,
        #[arg(long, value_parser = parse_label)]
        label: Label,
        #[arg(long)]
        note: Option<String>,
    },
    /// Print pairwise and pooled agreement with the gate verdict.
    Kappa {
        #[command(flatten)]
        store: StoreArg,
    },
    /// Write resolved records with their final labels.
    Export {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long)]
        out: PathBuf,
        /// Export resolved records even if others are unresolved.
        #[arg(long)]
        allow_unresolved: bool,
        #[arg(long)]
        min_pair_items: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Sample resolved records for a quality check.
    Qc {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, default_value_t = 0.1)]
        rate: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    min_df: usize,
    #[arg(long)]
    max_features: Option<usize>,
    /// Hyperparameter override, `name=value`; repeatable.
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Labeled corpus.
    #[arg(long)]
    truth: PathBuf,
    /// Prediction files; repeatable.
    #[arg(long = "preds", required = true)]
    preds: Vec<PathBuf>,
    #[arg(long, default_value = "markdown", value_parser = ReportFormat::from_str)]
    format: ReportFormat,
    /// Leave the TN% column out of the confusion table.
    #[arg(long)]
    no_tn: bool,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Comma-separated model kinds; all when omitted.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    /// Override, `kind.name=value`; repeatable.
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long, default_value_t = 2)]
    min_df: usize,
    /// Skip minority-class oversampling of the training split.
    #[arg(long)]
    no_upsample: bool,
    /// Directory for the report files and trained models.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "NEWSBENCH_CONFIG")]
    config: Option<PathBuf>,
    /// Port on the configured bind address.
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    store: Option<PathBuf>,
}

fn parse_label(s: &str) -> Result<Label, String> {
    match s.to_ascii_lowercase().as_str() {
        "0" | "real" => Ok(Label::Real),
        "1" | "fake" => Ok(Label::Fake),
        other => Err(format!("{other:?} is not a label (0, 1, real or fake)")),
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn open_store(s: &StoreArg) -> anyhow::Result<WorkflowStore> {
    WorkflowStore::open(&s.store).with_context(|| format!("opening store {}", s.store.display()))
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Label(c) => label(c),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Fixture { out, seed } => {
            let f = write_workflow_fixture(&out, seed)?;
            println!("feeds        {}", f.feeds.display());
            println!("benchmark    {}", f.benchmark.display());
            println!("llm stub     {}", f.llm_responses.display());
            println!("annotators   {}", f.annotators.display());
            println!("reviews      {}", f.reviews.display());
            println!("window       {} .. {}", f.window_start.to_rfc3339(), f.window_end.to_rfc3339());
            Ok(())
        }
        Command::Serve(a) => serve(a),
    }
}

fn ingest(a: IngestArgs) -> anyhow::Result<()> {
    let params = IngestParams {
        feeds: a.feeds,
        benchmark: a.benchmark,
        window_start: a.window_start,
        window_end: a.window_end,
        limit: a.limit,
        max_sentences: a.max_sentences,
        title_fallback: a.title_fallback,
        timeout_secs: a.timeout_secs,
    };
    let (records, summary) = tasks::run_ingest(&params)?;
    tasks::write_records(&a.out, &records)?;
    if let Some(csv) = a.csv {
        write_csv(std::fs::File::create(&csv)?, &records)?;
    }
    for f in &summary.feed_failures {
        eprintln!("warning: feed {} failed: {}", f.url, f.error);
    }
    eprintln!("wrote {} records to {}", records.len(), a.out.display());
    print_json(&summary)
}

fn label(c: LabelCommand) -> anyhow::Result<()> {
    let now = Utc::now();
    match c {
        LabelCommand::Import { store, corpus } => {
            let n = open_store(&store)?.add_records(read_corpus(&corpus)?)?;
            println!("added {n} records");
        }
        LabelCommand::Annotators { store, file } => {
            let annotators: Vec<Annotator> = jsonl::read(&file)?;
            let n = open_store(&store)?.register_annotators(annotators)?;
            println!("registered {n} annotators");
        }
        LabelCommand::Suggest { store, stub, base_url, model, prompt } => {
            let llm = LlmConfig { base_url, model, prompt_file: prompt, stub_responses: stub };
            let client = tasks::completion_client(&llm)?;
            let template = tasks::prompt_template(&llm)?;
            let st = open_store(&store)?;
            let todo = st.read(|s| s.records().iter().filter(|r| s.suggestion(&r.id).is_none()).cloned().collect::<Vec<_>>());
            let outcome = tasks::suggest_all(&todo, client.as_ref(), &template, now);
            for s in &outcome.suggestions {
                st.record_suggestion(s.clone())?;
            }
            println!("suggested {} of {} records", outcome.suggestions.len(), todo.len());
            for f in &outcome.failures {
                eprintln!("warning: {}: {}", f.record_id, f.error);
            }
        }
        LabelCommand::Visibility { store, state } => {
            open_store(&store)?.set_suggestion_visibility(state == "on")?;
            println!("suggestions {state}");
        }
        LabelCommand::Assign { store, seed } => {
            let created = open_store(&store)?.assign(seed)?;
            println!("created {} assignments", created.len());
        }
        LabelCommand::Review { store, assignment, label, note, script } => {
            let st = open_store(&store)?;
            if let Some(path) = script {
                let decisions: Vec<ScriptedDecision> = jsonl::read(&path)?;
                print_json(&apply_scripted_reviews(&st, &decisions, now)?)?;
            } else {
                let (Some(id), Some(label)) = (assignment, label) else { bail!("--assignment and --label are required") };
                print_json(&st.record_review(&id, label, note, now)?)?;
            }
        }
        LabelCommand::Tiebreak { store, record, annotator, label, note } => {
            print_json(&open_store(&store)?.submit_tiebreak(&record, &annotator, label, note, now)?)?;
        }
        LabelCommand::Kappa { store } => {
            let summary = open_store(&store)?.read(|s| s.agreement());
            print_json(&GateReport::evaluate(&summary, &ExportOptions::default()))?;
        }
        LabelCommand::Export { store, out, allow_unresolved, min_pair_items, threshold } => {
            let defaults = ExportOptions::default();
            let opts = ExportOptions {
                strict: !allow_unresolved,
                min_pair_items: min_pair_items.unwrap_or(defaults.min_pair_items),
                kappa_threshold: threshold.unwrap_or(defaults.kappa_threshold),
            };
            let st = open_store(&store)?.snapshot();
            let outcome = export_labeled_corpus(st.records(), &st.adjudications()?, &st.agreement(), &opts, &out)?;
            eprintln!("wrote {} records to {}", outcome.written, out.display());
            print_json(&outcome)?;
        }
        LabelCommand::Qc { store, rate, seed, out } => {
            let st = open_store(&store)?.snapshot();
            let resolved: Vec<_> = st.adjudications()?.into_iter().filter(|a| a.status.is_resolved()).collect();
            let sample = qc_sample(&resolved, rate, seed)?;
            jsonl::write(&out, &sample)?;
            println!("sampled {} of {} resolved records", sample.len(), resolved.len());
        }
    }
    Ok(())
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let overrides = tasks::parse_overrides(&a.set)?
        .into_iter()
        .map(|(k, v)| (k, serde_json::Value::String(v)))
        .collect();
    let params =
        TrainParams { model: a.model, corpus: a.corpus, seed: a.seed, min_df: a.min_df, max_features: a.max_features, overrides };
    let model = tasks::run_train(&params, Some(Utc::now()))?;
    model.save(&a.out)?;
    eprintln!("saved {} model to {}", model.kind, a.out.display());
    Ok(())
}

fn predict(a: PredictArgs) -> anyhow::Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let records = read_corpus(&a.corpus)?;
    let rows = predict_records(&model, &records)?;
    write_predictions(&a.out, model.kind.display_name(), &rows)?;
    eprintln!("wrote {} predictions to {}", rows.len(), a.out.display());
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let params = EvaluateParams {
        truth: Some(a.truth),
        predictions: a.preds,
        corpus: None,
        seed: DEFAULT_SEED,
        models: None,
        min_df: 2,
        include_tn: !a.no_tn,
    };
    let lb = tasks::run_evaluate(&params)?;
    let opts = RenderOptions { include_tn: params.include_tn, ..RenderOptions::default() };
    emit(&render_report(&lb, a.format, &opts)?, a.out.as_deref())
}

fn benchmark(a: BenchmarkArgs) -> anyhow::Result<()> {
    let records = read_corpus(&a.corpus)?;
    let mut cfg = BenchmarkConfig::new(a.seed);
    cfg.min_df = a.min_df;
    cfg.upsample = !a.no_upsample;
    if !a.models.is_empty() {
        cfg.kinds = a.models.iter().map(|m| ModelKind::from_str(m)).collect::<Result<_, _>>()?;
    }
    for (key, value) in tasks::parse_overrides(&a.set)? {
        let Some((kind, name)) = key.split_once('.') else { bail!("benchmark overrides are kind.name=value, got {key:?}") };
        cfg.overrides.extend(tasks::overrides_for(ModelKind::from_str(kind)?, &[(name.to_string(), value)]));
    }
    let run = run_benchmark(&records, &cfg)?;
    let report = tasks::write_reports(&run.leaderboard, &a.out_dir, "leaderboard", true)?;
    let models_dir = a.out_dir.join("models");
    std::fs::create_dir_all(&models_dir)?;
    for m in &run.models {
        m.save(models_dir.join(format!("{}.model.json", m.kind.as_str())))?;
    }
    eprintln!(
        "trained {} models on {} rows, tested on {}, vocabulary {}; report {}",
        run.models.len(),
        run.n_train,
        run.n_test,
        run.vocabulary_size,
        report.display()
    );
    print!("{}", render_report(&run.leaderboard, ReportFormat::Markdown, &RenderOptions::default())?);
    Ok(())
}

fn serve(a: ServeArgs) -> anyhow::Result<()> {
    let mut config = ServiceConfig::load(a.config.as_deref())?;
    if let Some(port) = a.port {
        let host = config.bind.rsplit_once(':').map_or(config.bind.as_str(), |(h, _)| h).to_string();
        config.bind = format!("{host}:{port}");
    }
    if let Some(store) = a.store {
        config.store_dir = store;
    }
    if config.tokens.is_empty() {
        tracing::warn!("no tokens configured; every authenticated route will answer 401");
    }
    let workers = config.workers;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(workers.max(2))
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let state = crate::build_state(config, crate::system_clock())?;
        crate::api::serve(state).await
    })
}
