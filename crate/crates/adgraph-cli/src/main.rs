//! Command-line driver for the adgraph pipeline.
//!
//! Every stage reads and writes inside a run directory named after the
//! hash of the resolved configuration, so runs with different settings
//! never collide and reruns of a stage are byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use adgraph::config::Config;
use adgraph::corpus::{deduplicate, ingest, read_corpus, write_corpus, SchemaMap};
use adgraph::datasets::{
    assignment_from_vec, bias_report_htrp, bias_report_oad, emit_htrp, emit_oad, read_jsonl,
    read_split_csv, split_components, write_jsonl, write_split_csv, PairExample, SplitAssignment,
    TextExample,
};
use adgraph::extract::{apply_spans, extract_metadata_entities, parse_span_line, SpanApplyStats};
use adgraph::graph::{build_graph, component_stats, read_graph, write_components_csv, write_graph};
use adgraph::labeler::{
    collect_location_queries, label_components, pick_points, read_labels_csv, write_labels_csv,
    CachedResolver, Candidate, FixtureProvider, GeoProvider, LiveProvider, ResolveStats,
};
use adgraph::model_lab::{
    evaluate_at, html_report, integrated_gradients, ngram_attributions, pick_threshold,
    read_checkpoint, text_report, tokenize, train_pair, train_text, write_checkpoint,
    AttributionRecord, Baseline, IgOptions, NgramRow, TinyClassifier, TrainOptions,
};
use adgraph::ner_eval::{evaluate as ner_evaluate, read_entities, write_report_csv};
use adgraph::synth::{generate, write_synth, SynthOptions};
use adgraph::RelatednessGraph;

const CORPUS: &str = "corpus.jsonl";
const GRAPH: &str = "graph.adgb";
const COMPONENTS: &str = "components.csv";
const LABELS: &str = "labels.csv";
const SPLIT: &str = "split.csv";

#[derive(Parser)]
#[command(
    name = "adgraph",
    version,
    about = "Turns raw ad feeds into graphs, weak labels, datasets, and attributions"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of flat `key = value` lines; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set sim.gate=0.6
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Directory that holds per-config run directories.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    Htrp,
    Oad,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Htrp => "htrp",
            Task::Oad => "oad",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Read a raw ad feed (JSONL) and collapse exact duplicates.
    Ingest {
        /// Raw feed path.
        #[arg(long)]
        ads: PathBuf,
    },
    /// Apply entity spans and metadata extraction; masks the corpus.
    Extract {
        /// Span file (JSONL with ad_id/start/end/category/score).
        #[arg(long)]
        spans: PathBuf,
    },
    /// Score predicted entity spans against gold annotations.
    EvalNer {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Build the connector relatedness graph from the corpus.
    BuildGraph,
    /// Label components with the distance and identifier heuristics.
    Label {
        /// Geocoder fixture (JSONL of query/candidates); otherwise
        /// label.geocode_url must be configured.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Assign whole components to train or test.
    Split,
    /// Emit the pair dataset from intra-split edges and sampled non-edges.
    EmitOad,
    /// Emit the per-ad dataset with near-duplicate screening.
    EmitHtrp,
    /// Mask-token prevalence and paired-rank bias statistics.
    BiasReport {
        #[arg(long, value_enum)]
        task: Option<Task>,
    },
    /// Train the classifier on an emitted dataset.
    Train {
        #[arg(long, value_enum)]
        task: Task,
    },
    /// Evaluate a trained model on the test split.
    Evaluate {
        #[arg(long, value_enum)]
        task: Task,
    },
    /// Integrated-gradients attributions over test examples.
    Attribute {
        #[arg(long, value_enum)]
        task: Task,
        /// Cap on the number of attributed examples.
        #[arg(long, default_value_t = 50)]
        limit: usize,
    },
    /// Aggregate attribution scores over token n-grams.
    RankNgrams {
        #[arg(long, value_enum)]
        task: Task,
    },
    /// Generate a synthetic corpus with ground truth.
    Synth {
        /// Output directory (defaults to <run dir>/synth).
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Err(err) = run(cli) {
        log::error!("{err:#}");
        std::process::exit(2);
    }
}

fn load_config(common: &Common) -> Result<Config> {
    let mut config = match &common.config {
        Some(path) => Config::from_path(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => Config::default(),
    };
    for kv in &common.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        config
            .apply_override(key, value)
            .with_context(|| format!("applying override {kv:?}"))?;
    }
    Ok(config)
}

/// Creates (if needed) and returns the run directory for this config,
/// leaving a canonical copy of the resolved settings inside it.
fn run_dir(common: &Common, config: &Config) -> Result<PathBuf> {
    let dir = common.out.join(config.run_dir_name());
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating run directory {}", dir.display()))?;
    std::fs::write(dir.join("config.resolved"), config.emit())?;
    Ok(dir)
}

fn write_stats<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.common)?;
    let dir = run_dir(&cli.common, &config)?;
    log::info!("run directory {}", dir.display());

    match cli.command {
        Command::Ingest { ads } => cmd_ingest(&dir, &config, &ads),
        Command::Extract { spans } => cmd_extract(&dir, &config, &spans),
        Command::EvalNer { gold, pred } => cmd_eval_ner(&dir, &config, &gold, &pred),
        Command::BuildGraph => cmd_build_graph(&dir, &config),
        Command::Label { fixture } => cmd_label(&dir, &config, fixture.as_deref()),
        Command::Split => cmd_split(&dir, &config),
        Command::EmitOad => cmd_emit_oad(&dir, &config),
        Command::EmitHtrp => cmd_emit_htrp(&dir, &config),
        Command::BiasReport { task } => cmd_bias_report(&dir, task),
        Command::Train { task } => cmd_train(&dir, &config, task),
        Command::Evaluate { task } => cmd_evaluate(&dir, task),
        Command::Attribute { task, limit } => cmd_attribute(&dir, &config, task, limit),
        Command::RankNgrams { task } => cmd_rank_ngrams(&dir, &config, task),
        Command::Synth { dir: out } => cmd_synth(&dir, &config, out),
    }
}

#[derive(Serialize)]
struct IngestReport<'a> {
    ingest: &'a adgraph::corpus::IngestStats,
    dedup: &'a adgraph::corpus::DedupStats,
}

fn cmd_ingest(dir: &Path, config: &Config, ads: &Path) -> Result<()> {
    let (raws, ingest_stats) = ingest(ads, &SchemaMap::default())
        .with_context(|| format!("ingesting {}", ads.display()))?;
    let (records, dedup_stats) = deduplicate(raws, config.dedup_trim);
    write_corpus(&dir.join(CORPUS), &records)?;
    write_stats(dir, "ingest_stats.json", &IngestReport { ingest: &ingest_stats, dedup: &dedup_stats })?;
    log::info!(
        "ingested {} lines -> {} records (duplicate rate {:.4}, {} empty dropped)",
        ingest_stats.lines_total,
        records.len(),
        dedup_stats.duplicate_rate,
        dedup_stats.dropped_empty
    );
    Ok(())
}

fn cmd_extract(dir: &Path, config: &Config, spans_path: &Path) -> Result<()> {
    let mut records = read_corpus(&dir.join(CORPUS)).context("reading corpus (run ingest first)")?;
    let text = std::fs::read_to_string(spans_path)
        .with_context(|| format!("reading spans {}", spans_path.display()))?;
    let mut by_ad: BTreeMap<u32, Vec<adgraph::RawSpan>> = BTreeMap::new();
    let mut span_count = 0usize;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let span = parse_span_line(line)
            .map_err(|e| anyhow!("{}:{}: {e}", spans_path.display(), i + 1))?;
        if span.ad_id as usize >= records.len() {
            bail!("{}:{}: ad id {} out of range", spans_path.display(), i + 1, span.ad_id);
        }
        by_ad.entry(span.ad_id).or_default().push(span);
        span_count += 1;
    }

    let opts = config.mask_options();
    let mut totals = SpanApplyStats::default();
    let mut metadata_ok = 0u64;
    let mut metadata_rejected = 0u64;
    let empty: Vec<adgraph::RawSpan> = Vec::new();
    for rec in &mut records {
        let spans = by_ad.get(&rec.ad_id).unwrap_or(&empty);
        let stats = apply_spans(rec, spans, &opts)
            .with_context(|| format!("applying spans to ad {}", rec.ad_id))?;
        totals.merge(&stats);
        let (ok, rejected) = extract_metadata_entities(rec, opts.oh_as_zero);
        metadata_ok += ok;
        metadata_rejected += rejected;
    }
    write_corpus(&dir.join(CORPUS), &records)?;

    #[derive(Serialize)]
    struct ExtractReport {
        spans_read: usize,
        metadata_entities_ok: u64,
        metadata_entities_rejected: u64,
        #[serde(flatten)]
        spans: SpanApplyStats,
    }
    let report = ExtractReport {
        spans_read: span_count,
        metadata_entities_ok: metadata_ok,
        metadata_entities_rejected: metadata_rejected,
        spans: totals,
    };
    write_stats(dir, "extract_stats.json", &report)?;
    log::info!(
        "applied {} spans ({} masked, {} canonical ok), {} metadata entities",
        report.spans.spans_total,
        report.spans.masked_spans,
        report.spans.canonical_ok,
        metadata_ok
    );
    Ok(())
}

fn cmd_eval_ner(dir: &Path, config: &Config, gold: &Path, pred: &Path) -> Result<()> {
    let gold_entities = read_entities(gold).map_err(|e| anyhow!(e))?;
    let pred_entities = read_entities(pred).map_err(|e| anyhow!(e))?;
    let report = ner_evaluate(
        &gold_entities,
        &pred_entities,
        config.ner_alpha,
        config.ner_conventional,
        config.ner_min_score,
    );
    write_report_csv(&dir.join("ner_report.csv"), &report)?;
    write_stats(dir, "ner_report.json", &report)?;
    println!(
        "overall precision={:.4} recall={:.4} f1={:.4} over {} docs",
        report.overall.precision, report.overall.recall, report.overall.f1, report.docs
    );
    Ok(())
}

fn cmd_build_graph(dir: &Path, config: &Config) -> Result<()> {
    let records = read_corpus(&dir.join(CORPUS)).context("reading corpus (run ingest first)")?;
    let opts = config.graph_options()?;
    let graph = build_graph(&records, &opts);
    write_graph(&dir.join(GRAPH), &graph)?;
    write_components_csv(&dir.join(COMPONENTS), &graph)?;
    let stats = component_stats(&graph, &records);
    write_stats(dir, "graph_stats.json", &stats)?;
    log::info!(
        "graph: {} nodes, {} edges, {} components ({} mixed provenance)",
        stats.node_count,
        stats.edge_count,
        stats.component_count,
        stats.mixed_provenance
    );
    Ok(())
}

/// Runs the resolver over every distinct location query with the
/// configured retry/backoff/concurrency tuning.
fn resolve_queries<P: GeoProvider + Sync>(
    provider: P,
    cache: Option<&Path>,
    config: &Config,
    queries: &BTreeSet<String>,
) -> Result<(BTreeMap<String, Vec<Candidate>>, ResolveStats)> {
    let mut resolver = CachedResolver::new(provider, cache)?;
    resolver.retries = config.label_retries;
    resolver.backoff_ms = config.label_backoff_ms;
    resolver.concurrency = config.label_concurrency;
    Ok(resolver.resolve_all(queries)?)
}

fn cmd_label(dir: &Path, config: &Config, fixture: Option<&Path>) -> Result<()> {
    let records = read_corpus(&dir.join(CORPUS)).context("reading corpus (run ingest first)")?;
    let graph = read_graph(&dir.join(GRAPH)).context("reading graph (run build-graph first)")?;
    let queries = collect_location_queries(&records);
    let cache_path = if config.label_geocode_cache.is_empty() {
        None
    } else {
        Some(PathBuf::from(&config.label_geocode_cache))
    };

    let (candidates, resolve_stats) = match fixture {
        Some(path) => {
            let provider = FixtureProvider::from_path(path)
                .with_context(|| format!("loading fixture {}", path.display()))?;
            resolve_queries(provider, cache_path.as_deref(), config, &queries)?
        }
        None if !config.label_geocode_url.is_empty() => {
            let provider = LiveProvider::from_env(&config.label_geocode_url);
            resolve_queries(provider, cache_path.as_deref(), config, &queries)?
        }
        None => bail!("no geocoding source: pass --fixture or set label.geocode_url"),
    };

    let resolved = pick_points(&candidates);
    let outcome = label_components(&records, &graph, &resolved, &config.label_options());
    write_labels_csv(&dir.join(LABELS), &graph, &outcome)?;

    #[derive(Serialize)]
    struct LabelReport<'a> {
        #[serde(flatten)]
        label: &'a adgraph::labeler::LabelStats,
        resolve: &'a ResolveStats,
        queries_resolved_us: usize,
    }
    write_stats(
        dir,
        "label_stats.json",
        &LabelReport {
            label: &outcome.stats,
            resolve: &resolve_stats,
            queries_resolved_us: resolved.len(),
        },
    )?;
    log::info!(
        "labeled {} components: {} positive ({} of {} ads)",
        outcome.stats.components_total,
        outcome.stats.components_positive,
        outcome.stats.ads_positive,
        outcome.stats.ads_total
    );
    Ok(())
}

fn cmd_split(dir: &Path, config: &Config) -> Result<()> {
    let graph = read_graph(&dir.join(GRAPH)).context("reading graph (run build-graph first)")?;
    let split = split_components(&graph, config.split_target, config.seed_split);
    write_split_csv(&dir.join(SPLIT), &split)?;
    write_stats(dir, "split_stats.json", &split.stats())?;
    log::info!(
        "split: {} train / {} test ads (target {:.2}, achieved {:.4})",
        split.train_ads,
        split.test_ads,
        split.target,
        split.achieved
    );
    Ok(())
}

fn load_split(dir: &Path, config: &Config, graph: &RelatednessGraph) -> Result<SplitAssignment> {
    let assignment = read_split_csv(&dir.join(SPLIT), graph.node_count as usize)
        .context("reading split (run split first)")?;
    Ok(assignment_from_vec(graph, assignment, config.split_target)?)
}

fn cmd_emit_oad(dir: &Path, config: &Config) -> Result<()> {
    let records = read_corpus(&dir.join(CORPUS)).context("reading corpus (run ingest first)")?;
    let graph = read_graph(&dir.join(GRAPH)).context("reading graph (run build-graph first)")?;
    let split = load_split(dir, config, &graph)?;
    let (train, test, stats) = emit_oad(&records, &graph, &split, &config.oad_options());
    write_jsonl(&dir.join("oad_train.jsonl"), &train)?;
    write_jsonl(&dir.join("oad_test.jsonl"), &test)?;
    write_stats(dir, "oad_stats.json", &stats)?;
    log::info!(
        "oad: train {}+/{}-, test {}+/{}-, {} similar pairs discarded",
        stats.train_positive,
        stats.train_negative,
        stats.test_positive,
        stats.test_negative,
        stats.discarded_similar
    );
    Ok(())
}

fn cmd_emit_htrp(dir: &Path, config: &Config) -> Result<()> {
    let records = read_corpus(&dir.join(CORPUS)).context("reading corpus (run ingest first)")?;
    let graph = read_graph(&dir.join(GRAPH)).context("reading graph (run build-graph first)")?;
    let split = load_split(dir, config, &graph)?;
    let labels = read_labels_csv(&dir.join(LABELS), records.len())
        .context("reading labels (run label first)")?;
    let (train, test, stats) = emit_htrp(&records, &split, &labels, &config.htrp_options());
    write_jsonl(&dir.join("htrp_train.jsonl"), &train)?;
    write_jsonl(&dir.join("htrp_test.jsonl"), &test)?;
    write_stats(dir, "htrp_stats.json", &stats)?;
    log::info!(
        "htrp: train {} kept ({} positive, {} dropped), test {} kept ({} positive, {} dropped)",
        stats.train_kept,
        stats.train_positive,
        stats.train_dropped,
        stats.test_kept,
        stats.test_positive,
        stats.test_dropped
    );
    Ok(())
}

fn cmd_bias_report(dir: &Path, task: Option<Task>) -> Result<()> {
    let mut ran = 0;
    let want = |t: Task| task.is_none() || task == Some(t);
    if want(Task::Htrp) && dir.join("htrp_train.jsonl").exists() {
        let train: Vec<TextExample> = read_jsonl(&dir.join("htrp_train.jsonl"))?;
        let test: Vec<TextExample> = read_jsonl(&dir.join("htrp_test.jsonl"))?;
        let report = bias_report_htrp(&train, &test)?;
        write_stats(dir, "bias_htrp.json", &report)?;
        ran += 1;
    }
    if want(Task::Oad) && dir.join("oad_train.jsonl").exists() {
        let train: Vec<PairExample> = read_jsonl(&dir.join("oad_train.jsonl"))?;
        let test: Vec<PairExample> = read_jsonl(&dir.join("oad_test.jsonl"))?;
        let report = bias_report_oad(&train, &test)?;
        write_stats(dir, "bias_oad.json", &report)?;
        ran += 1;
    }
    if ran == 0 {
        bail!("no emitted datasets found (run emit-htrp or emit-oad first)");
    }
    log::info!("wrote {ran} bias report(s)");
    Ok(())
}

fn train_options(config: &Config) -> TrainOptions {
    TrainOptions {
        epochs: config.train_epochs,
        batch: config.train_batch,
        lr: config.train_lr,
        momentum: config.train_momentum,
        val_fraction: config.train_val_fraction,
        dim: config.train_dim,
        hidden: config.train_hidden,
        min_freq: config.train_min_freq,
        seed: config.seed_train,
    }
}

/// One validation example scored by the trained model; the evaluate
/// stage picks its operating threshold from these.
#[derive(Serialize, Deserialize)]
struct ValRow {
    score: f64,
    label: u8,
}

fn cmd_train(dir: &Path, config: &Config, task: Task) -> Result<()> {
    let opts = train_options(config);
    let name = task.name();
    let (outcome, val_rows) = match task {
        Task::Htrp => {
            let examples: Vec<TextExample> =
                read_jsonl(&dir.join("htrp_train.jsonl")).context("run emit-htrp first")?;
            let outcome = train_text(&examples, &opts)?;
            let rows: Vec<ValRow> = outcome
                .val_indices
                .iter()
                .map(|&i| ValRow {
                    score: outcome
                        .model
                        .score(&outcome.model.vocab.encode(&examples[i].text), None),
                    label: examples[i].label,
                })
                .collect();
            (outcome, rows)
        }
        Task::Oad => {
            let examples: Vec<PairExample> =
                read_jsonl(&dir.join("oad_train.jsonl")).context("run emit-oad first")?;
            let outcome = train_pair(&examples, &opts)?;
            let rows: Vec<ValRow> = outcome
                .val_indices
                .iter()
                .map(|&i| ValRow {
                    score: outcome.model.score(
                        &outcome.model.vocab.encode(&examples[i].text_a),
                        Some(&outcome.model.vocab.encode(&examples[i].text_b)),
                    ),
                    label: examples[i].label,
                })
                .collect();
            (outcome, rows)
        }
    };

    write_checkpoint(&dir.join(format!("model_{name}.admc")), &outcome.model)?;
    write_stats(dir, &format!("train_history_{name}.json"), &outcome.history)?;
    if val_rows.is_empty() {
        log::warn!("no validation examples carved; evaluate will fall back to threshold 0.5");
    } else {
        write_jsonl(&dir.join(format!("val_scores_{name}.jsonl")), &val_rows)?;
    }
    log::info!(
        "trained {name}: {} params, best epoch {} of {}, {} train / {} val examples",
        outcome.history.param_count,
        outcome.history.best_epoch + 1,
        outcome.history.epochs.len(),
        outcome.history.train_examples,
        outcome.history.val_examples
    );
    Ok(())
}

fn score_examples(
    model: &TinyClassifier,
    dir: &Path,
    task: Task,
    file: &str,
) -> Result<(Vec<f64>, Vec<u8>)> {
    match task {
        Task::Htrp => {
            let examples: Vec<TextExample> = read_jsonl(&dir.join(file))?;
            let scores = examples
                .iter()
                .map(|e| model.score(&model.vocab.encode(&e.text), None))
                .collect();
            let labels = examples.iter().map(|e| e.label).collect();
            Ok((scores, labels))
        }
        Task::Oad => {
            let examples: Vec<PairExample> = read_jsonl(&dir.join(file))?;
            let scores = examples
                .iter()
                .map(|e| {
                    model.score(
                        &model.vocab.encode(&e.text_a),
                        Some(&model.vocab.encode(&e.text_b)),
                    )
                })
                .collect();
            let labels = examples.iter().map(|e| e.label).collect();
            Ok((scores, labels))
        }
    }
}

fn cmd_evaluate(dir: &Path, task: Task) -> Result<()> {
    let name = task.name();
    let model = read_checkpoint(&dir.join(format!("model_{name}.admc")))
        .context("reading model (run train first)")?;
    if model.pair != (task == Task::Oad) {
        bail!("model_{name}.admc was trained for the other task shape");
    }

    let val_path = dir.join(format!("val_scores_{name}.jsonl"));
    let threshold = if val_path.exists() {
        let rows: Vec<ValRow> = read_jsonl(&val_path)?;
        let scores: Vec<f64> = rows.iter().map(|r| r.score).collect();
        let labels: Vec<u8> = rows.iter().map(|r| r.label).collect();
        let (t, f1) = pick_threshold(&scores, &labels);
        log::info!("threshold {t:.6} picked on {} validation examples (f1 {f1:.4})", rows.len());
        t
    } else {
        log::warn!("no validation scores found; using threshold 0.5");
        0.5
    };

    let (scores, labels) = score_examples(&model, dir, task, &format!("{name}_test.jsonl"))
        .context("scoring test set (run the emit stage first)")?;
    let report = evaluate_at(&scores, &labels, threshold);
    write_stats(dir, &format!("eval_{name}.json"), &report)?;
    println!(
        "{name}: acc={:.4} p={:.4} r={:.4} f1={:.4} bal_acc={:.4} auc={} (threshold {:.4}, {} examples)",
        report.accuracy,
        report.precision,
        report.recall,
        report.f1,
        report.balanced_accuracy,
        report.auc.map_or("n/a".to_string(), |a| format!("{a:.4}")),
        report.threshold,
        report.examples
    );
    Ok(())
}

fn ig_options(config: &Config) -> Result<IgOptions> {
    Ok(IgOptions {
        steps: config.ig_steps,
        baseline: config.ig_baseline.parse::<Baseline>().map_err(|e| anyhow!(e))?,
        target_prob: config.ig_target == "prob",
    })
}

fn cmd_attribute(dir: &Path, config: &Config, task: Task, limit: usize) -> Result<()> {
    let name = task.name();
    let model = read_checkpoint(&dir.join(format!("model_{name}.admc")))
        .context("reading model (run train first)")?;
    let opts = ig_options(config)?;
    let mut records: Vec<AttributionRecord> = Vec::new();

    match task {
        Task::Htrp => {
            let examples: Vec<TextExample> =
                read_jsonl(&dir.join(format!("{name}_test.jsonl")))?;
            for ex in examples.iter().take(limit) {
                let tokens = tokenize(&ex.text);
                let ids: Vec<u32> = tokens.iter().map(|t| model.vocab.id(t)).collect();
                let attr = integrated_gradients(&model, &ids, None, 1, &opts)?;
                records.push(AttributionRecord {
                    ad_id_a: ex.ad_id,
                    ad_id_b: None,
                    label: ex.label,
                    score: model.score(&ids, None),
                    tokens_a: tokens,
                    attributions_a: attr.scores_a,
                    tokens_b: Vec::new(),
                    attributions_b: Vec::new(),
                    convergence_delta: attr.convergence_delta,
                });
            }
        }
        Task::Oad => {
            let examples: Vec<PairExample> =
                read_jsonl(&dir.join(format!("{name}_test.jsonl")))?;
            for ex in examples.iter().take(limit) {
                let tokens_a = tokenize(&ex.text_a);
                let tokens_b = tokenize(&ex.text_b);
                let ids_a: Vec<u32> = tokens_a.iter().map(|t| model.vocab.id(t)).collect();
                let ids_b: Vec<u32> = tokens_b.iter().map(|t| model.vocab.id(t)).collect();
                let attr = integrated_gradients(&model, &ids_a, Some(&ids_b), 1, &opts)?;
                records.push(AttributionRecord {
                    ad_id_a: ex.ad_id_a,
                    ad_id_b: Some(ex.ad_id_b),
                    label: ex.label,
                    score: model.score(&ids_a, Some(&ids_b)),
                    tokens_a,
                    attributions_a: attr.scores_a,
                    tokens_b,
                    attributions_b: attr.scores_b,
                    convergence_delta: attr.convergence_delta,
                });
            }
        }
    }

    write_jsonl(&dir.join(format!("attributions_{name}.jsonl")), &records)?;
    let ngrams = top_ngrams(&records, config);
    std::fs::write(dir.join(format!("report_{name}.txt")), text_report(&records, &ngrams))?;
    std::fs::write(dir.join(format!("report_{name}.html")), html_report(&records, &ngrams))?;
    log::info!("attributed {} examples ({name})", records.len());
    Ok(())
}

fn top_ngrams(records: &[AttributionRecord], config: &Config) -> Vec<NgramRow> {
    let mut sequences: Vec<(&[String], &[f64])> = Vec::new();
    for rec in records {
        sequences.push((&rec.tokens_a, &rec.attributions_a));
        if !rec.tokens_b.is_empty() {
            sequences.push((&rec.tokens_b, &rec.attributions_b));
        }
    }
    let mut rows = ngram_attributions(&sequences, config.ngram_n, config.ngram_min_count);
    rows.truncate(config.ngram_top);
    rows
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn cmd_rank_ngrams(dir: &Path, config: &Config, task: Task) -> Result<()> {
    let name = task.name();
    let records: Vec<AttributionRecord> =
        read_jsonl(&dir.join(format!("attributions_{name}.jsonl")))
            .context("reading attributions (run attribute first)")?;
    let rows = top_ngrams(&records, config);
    let mut out = String::from("ngram,mean,std,count\n");
    for row in &rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{}\n",
            csv_quote(&row.ngram),
            row.mean,
            row.std,
            row.count
        ));
    }
    std::fs::write(dir.join(format!("ngrams_{name}.csv")), out)?;
    for row in rows.iter().take(10) {
        println!("{:<30} mean={:+.4} std={:.4} n={}", row.ngram, row.mean, row.std, row.count);
    }
    Ok(())
}

fn cmd_synth(dir: &Path, config: &Config, out: Option<PathBuf>) -> Result<()> {
    let target = out.unwrap_or_else(|| dir.join("synth"));
    let opts = SynthOptions {
        ads: config.synth_ads,
        clusters: config.synth_clusters,
        seed: config.seed_synth,
    };
    let output = generate(&opts)?;
    write_synth(&target, &output)?;
    log::info!(
        "synthesized {} raw ads ({} unique, {} planted clusters) into {}",
        output.ground_truth.raw_ads,
        output.ground_truth.unique_ads,
        output.ground_truth.clusters.len(),
        target.display()
    );
    Ok(())
}
