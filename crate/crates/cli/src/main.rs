//! `oprf` — build, query, and evaluate a precomputed pseudo-query retrieval
//! stack from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

mod models;
mod pipeline;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use oprf_core::corpus::{
    load_corpus, load_pseudo_queries, load_qrels, load_topics, read_pseudo_query_lines, read_run,
    write_run, CorpusFormat, RunFile,
};
use oprf_core::dense::{PrfConfig, PrfMode};
use oprf_core::eval::{
    latency_report, map_at, ndcg_at, paired_ttest, read_timing_csv, recall_at, run_sweep,
    write_timing_csv, MetricConfig, PerQuery, SweepAssets, SweepParam, SweepSpec, TimingRow,
    PHASES,
};
use oprf_core::lexical::{Bm25Params, InvertedIndex, Rm3Params, StemmerKind, Tokenizer};
use oprf_core::offline::{estimate_storage, prepare, OfflineConfig};
use oprf_core::online::{OnlineConfig, SearchEngine, SparseConfig};
use oprf_core::synth::{synthesize, SynthConfig};
use oprf_core::ResultStore;

#[derive(Parser)]
#[command(name = "oprf", version, about = "Single-pass retrieval over precomputed pseudo-query results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build lexical indexes for pseudo-queries and documents.
    Index(IndexArgs),
    /// Generate a deterministic synthetic fixture.
    Synth(SynthArgs),
    /// Precompute per-pseudo-query top-k lists into a result store.
    Prepare(PrepareArgs),
    /// Answer topics against a prepared store and write a TREC run.
    Search(SearchArgs),
    /// Score runs against qrels; optionally compare two systems.
    Eval(EvalArgs),
    /// Sweep s, k, or m and report effectiveness plus latency per value.
    Sweep(SweepArgs),
    /// Run index → prepare → search → eval from one config file.
    Pipeline(pipeline::PipelineArgs),
    /// Per-document storage footprint of a store configuration.
    EstimateStorage(EstimateArgs),
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<oprf_core::Error> for CliError {
    fn from(e: oprf_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult = Result<(), CliError>;

fn require_exists(path: &Path, what: &str) -> CliResult {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{what} path {} does not exist",
            path.display()
        )))
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Tsv,
    Jsonl,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Tsv => CorpusFormat::Tsv,
            FormatArg::Jsonl => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StemmerArg {
    Porter,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrfArg {
    Avg,
    None,
}

#[derive(Args)]
struct IndexArgs {
    /// Document collection (TSV `id<TAB>text` or JSONL).
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
    format: FormatArg,
    /// Pseudo-query file (`doc_ext_id<TAB>text`).
    #[arg(long)]
    pseudo_queries: Option<PathBuf>,
    /// Output path for the pseudo-query index.
    #[arg(long)]
    pq_index: Option<PathBuf>,
    /// Output path for the document index.
    #[arg(long)]
    doc_index: Option<PathBuf>,
    /// Expand each document with its pseudo-queries before indexing.
    #[arg(long)]
    expand: bool,
    #[arg(long, value_enum, default_value_t = StemmerArg::Porter)]
    stemmer: StemmerArg,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    n_docs: usize,
    /// Pseudo-queries generated per document.
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 50)]
    n_topics: usize,
    #[arg(long, default_value_t = 5)]
    cluster_size: usize,
}

#[derive(Args)]
struct PrepareArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
    format: FormatArg,
    #[arg(long)]
    pseudo_queries: PathBuf,
    /// Output store path.
    #[arg(long)]
    store: PathBuf,
    /// Documents stored per (pseudo-query, model).
    #[arg(long, default_value_t = 1000)]
    k: usize,
    /// Generation budget per document, recorded in the manifest.
    #[arg(long, default_value_t = 80)]
    m: u32,
    /// `[id=]dense:docemb.bin[:pqemb.bin]` or `[id=]lex:index.bin`, comma-separated.
    #[arg(long)]
    models: String,
    #[arg(long, value_enum, default_value_t = PrfArg::Avg)]
    prf: PrfArg,
    #[arg(long, default_value_t = 3)]
    prf_depth: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0.9)]
    k1: f64,
    #[arg(long, default_value_t = 0.4)]
    b: f64,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    pq_index: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
    format: FormatArg,
    #[arg(long)]
    topics: PathBuf,
    #[arg(long, default_value_t = 4)]
    s: usize,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    /// Fuse an on-the-fly sparse run for the original query.
    #[arg(long)]
    fuse_original: bool,
    /// Document index for the sparse fusion run.
    #[arg(long)]
    doc_index: Option<PathBuf>,
    /// Use RM3 expansion for the fusion run instead of plain BM25.
    #[arg(long)]
    rm3: bool,
    #[arg(long, default_value_t = 10)]
    fb_docs: usize,
    #[arg(long, default_value_t = 10)]
    fb_terms: usize,
    #[arg(long, default_value_t = 0.5)]
    orig_weight: f64,
    #[arg(long, default_value_t = 0.9)]
    k1: f64,
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    /// Output run file (TREC 6-column).
    #[arg(long)]
    out: PathBuf,
    /// Optional per-query timing CSV.
    #[arg(long)]
    timing: Option<PathBuf>,
    #[arg(long, default_value = "oprf")]
    tag: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Comma-separated: e.g. `ndcg@10,map,r@1k`.
    #[arg(long, default_value = "ndcg@10,map,r@1k")]
    metrics: String,
    /// Relevance threshold for MAP/recall; default 2 for graded qrels, 1 otherwise.
    #[arg(long)]
    threshold: Option<u32>,
    /// Second run to compare against.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Report paired two-tailed t-test p-values (requires --compare).
    #[arg(long)]
    sig: bool,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Timing logs to summarize, as `name=path`; repeatable.
    #[arg(long = "timing")]
    timings: Vec<String>,
    /// Baseline run name for latency multiples; defaults to the first log.
    #[arg(long)]
    timing_baseline: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// `s`, `k`, or `m`.
    #[arg(long)]
    param: String,
    /// Comma-separated ascending values.
    #[arg(long)]
    values: String,
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    pq_index: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
    format: FormatArg,
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Raw pseudo-query file; required for the m sweep.
    #[arg(long)]
    pseudo_queries: Option<PathBuf>,
    #[arg(long)]
    doc_index: Option<PathBuf>,
    #[arg(long)]
    fuse_original: bool,
    #[arg(long)]
    rm3: bool,
    #[arg(long, default_value_t = 4)]
    s: usize,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long)]
    threshold: Option<u32>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "sweep")]
    tag: String,
}

#[derive(Args)]
struct EstimateArgs {
    /// Unique pseudo-queries per document after deduplication.
    #[arg(long)]
    pq_per_doc: f64,
    #[arg(long, default_value_t = 34.0)]
    avg_pq_chars: f64,
    #[arg(long, default_value_t = 1000)]
    k: u64,
    #[arg(long, default_value_t = 4)]
    score_bytes: u64,
    #[arg(long, default_value_t = 4)]
    id_bytes: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Index(args) => run_index(args),
        Command::Synth(args) => run_synth(args),
        Command::Prepare(args) => run_prepare(args),
        Command::Search(args) => run_search(args),
        Command::Eval(args) => run_eval(args),
        Command::Sweep(args) => run_sweep_cmd(args),
        Command::Pipeline(args) => pipeline::run_pipeline(args),
        Command::EstimateStorage(args) => {
            let bytes = estimate_storage(
                args.pq_per_doc,
                args.avg_pq_chars,
                args.k,
                args.score_bytes,
                args.id_bytes,
            );
            println!("{bytes:.3} bytes/document ({} rounded)", bytes.round() as u64);
            Ok(())
        }
    }
}

fn tokenizer_for(stemmer: StemmerArg) -> Tokenizer {
    match stemmer {
        StemmerArg::Porter => Tokenizer::english(),
        StemmerArg::None => Tokenizer::new(
            true,
            oprf_core::lexical::classic_stopwords(),
            StemmerKind::None,
        ),
    }
}

fn run_index(args: IndexArgs) -> CliResult {
    require_exists(&args.corpus, "corpus")?;
    if args.pq_index.is_none() && args.doc_index.is_none() {
        return Err(usage("nothing to build: pass --pq-index and/or --doc-index"));
    }
    if (args.pq_index.is_some() || args.expand) && args.pseudo_queries.is_none() {
        return Err(usage("--pq-index and --expand require --pseudo-queries"));
    }
    if let Some(pq_path) = &args.pseudo_queries {
        require_exists(pq_path, "pseudo-queries")?;
    }

    let corpus = load_corpus(&args.corpus, args.format.into())?;
    let tokenizer = tokenizer_for(args.stemmer);

    if let Some(out) = &args.pq_index {
        let pq_path = args.pseudo_queries.as_ref().expect("checked above");
        let pqs = load_pseudo_queries(pq_path, &corpus)?;
        let index = InvertedIndex::build(
            pqs.iter().map(|pq| (pq.pq_id, pq.text.as_str())),
            tokenizer.clone(),
        )?;
        index.save(out)?;
        println!(
            "pq index: {} pseudo-queries ({} lines before dedup) -> {}",
            pqs.len(),
            read_pseudo_query_lines(pq_path, &corpus)?.len(),
            out.display()
        );
    }

    if let Some(out) = &args.doc_index {
        let expansions: BTreeMap<u32, String> = if args.expand {
            let pq_path = args.pseudo_queries.as_ref().expect("checked above");
            let mut by_doc: BTreeMap<u32, String> = BTreeMap::new();
            for (ordinal, text) in read_pseudo_query_lines(pq_path, &corpus)? {
                let slot = by_doc.entry(ordinal).or_default();
                slot.push(' ');
                slot.push_str(&text);
            }
            by_doc
        } else {
            BTreeMap::new()
        };
        let index = InvertedIndex::build(
            corpus.iter().map(|d| {
                let mut text = d.text.clone();
                if let Some(extra) = expansions.get(&d.ordinal) {
                    text.push_str(extra);
                }
                (d.ordinal, text)
            }),
            tokenizer,
        )?;
        index.save(out)?;
        println!(
            "doc index: {} documents{} -> {}",
            corpus.len(),
            if args.expand { " (expanded)" } else { "" },
            out.display()
        );
    }
    Ok(())
}

fn run_synth(args: SynthArgs) -> CliResult {
    let cfg = SynthConfig {
        seed: args.seed,
        n_docs: args.n_docs,
        m: args.m,
        dim: args.dim,
        n_topics: args.n_topics,
        cluster_size: args.cluster_size,
        ..SynthConfig::default()
    };
    if args.n_docs == 0 || args.m == 0 || args.dim == 0 {
        return Err(usage("--n-docs, --m, and --dim must be at least 1"));
    }
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(CliError::Runtime)?;
    let fixture = synthesize(&cfg);
    let paths = fixture.write_to(&args.out_dir)?;
    println!("corpus:         {}", paths.corpus.display());
    println!("pseudo-queries: {}", paths.pseudo_queries.display());
    println!("topics:         {}", paths.topics.display());
    println!("qrels:          {}", paths.qrels.display());
    println!("embeddings:     {}", paths.doc_embeddings.display());
    Ok(())
}

fn run_prepare(args: PrepareArgs) -> CliResult {
    require_exists(&args.corpus, "corpus")?;
    require_exists(&args.pseudo_queries, "pseudo-queries")?;
    validate_bm25(args.k1, args.b)?;
    if args.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let parsed = models::parse_models(&args.models).map_err(|e| usage(e.to_string()))?;
    for model in &parsed {
        for path in model.paths() {
            require_exists(path, &format!("model {}", model.id()))?;
        }
    }

    let corpus = load_corpus(&args.corpus, args.format.into())?;
    let pqs = load_pseudo_queries(&args.pseudo_queries, &corpus)?;
    let prf = match args.prf {
        PrfArg::Avg => PrfConfig {
            mode: PrfMode::Avg,
            depth: args.prf_depth,
        },
        PrfArg::None => PrfConfig {
            mode: PrfMode::None,
            depth: 0,
        },
    };
    let registry = models::load_registry(
        &parsed,
        prf,
        Bm25Params {
            k1: args.k1,
            b: args.b,
        },
    )?;
    let cfg = OfflineConfig { k: args.k, m: args.m };
    let store = prepare(&pqs, &registry, &cfg, args.workers)?;
    store.save(&args.store)?;
    println!(
        "store: {} pseudo-queries x {} models, k={} -> {}",
        store.n_pseudo_queries(),
        store.n_models(),
        store.k,
        args.store.display()
    );
    Ok(())
}

fn validate_bm25(k1: f64, b: f64) -> CliResult {
    if k1 <= 0.0 {
        return Err(usage(format!("--k1 must be positive, got {k1}")));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(usage(format!("--b must lie in [0, 1], got {b}")));
    }
    Ok(())
}

fn sparse_config(rm3: bool, fb_docs: usize, fb_terms: usize, orig_weight: f64, k1: f64, b: f64) -> SparseConfig {
    SparseConfig {
        bm25: Bm25Params { k1, b },
        rm3: Rm3Params {
            fb_docs,
            fb_terms,
            orig_weight,
        },
        use_rm3: rm3,
    }
}

fn run_search(args: SearchArgs) -> CliResult {
    require_exists(&args.store, "store")?;
    require_exists(&args.pq_index, "pq-index")?;
    require_exists(&args.corpus, "corpus")?;
    require_exists(&args.topics, "topics")?;
    if args.fuse_original && args.doc_index.is_none() {
        return Err(usage("--fuse-original requires --doc-index"));
    }
    if let Some(doc_index) = &args.doc_index {
        require_exists(doc_index, "doc-index")?;
    }
    validate_bm25(args.k1, args.b)?;
    if args.temperature <= 0.0 {
        return Err(usage(format!(
            "--temperature must be positive, got {}",
            args.temperature
        )));
    }
    if !(0.0..=1.0).contains(&args.orig_weight) {
        return Err(usage(format!(
            "--orig-weight must lie in [0, 1], got {}",
            args.orig_weight
        )));
    }

    let store = ResultStore::load(&args.store)?;
    let pq_index = InvertedIndex::load(&args.pq_index)?;
    let corpus = load_corpus(&args.corpus, args.format.into())?;
    let doc_ids = corpus.ext_id_table();
    let topics = load_topics(&args.topics)?;
    let doc_index = args
        .doc_index
        .as_ref()
        .map(|p| InvertedIndex::load(p))
        .transpose()?;

    let config = OnlineConfig {
        s: args.s,
        fuse_original: args.fuse_original,
        softmax_temperature: args.temperature,
        original_sparse: sparse_config(
            args.rm3,
            args.fb_docs,
            args.fb_terms,
            args.orig_weight,
            args.k1,
            args.b,
        ),
    };
    let engine = SearchEngine::new(&store, &pq_index, &doc_ids, doc_index.as_ref(), config)?;

    let mut run = RunFile::new(args.tag.clone());
    let mut timings = Vec::with_capacity(topics.len());
    let mut unmatched = 0usize;
    for topic in &topics {
        let output = engine.search(&topic.text)?;
        if output.matched == 0 {
            unmatched += 1;
        }
        run.add_ranking(&topic.qid, output.ranked)?;
        timings.push(TimingRow {
            qid: topic.qid.clone(),
            timing: output.timing,
        });
    }
    write_run(&args.out, &run)?;
    if let Some(timing_path) = &args.timing {
        write_timing_csv(timing_path, &timings)?;
    }
    if unmatched > 0 {
        eprintln!("warning: {unmatched} of {} queries matched no pseudo-query", topics.len());
    }
    let mean_us = timings.iter().map(|t| t.timing.total_us as f64).sum::<f64>()
        / timings.len().max(1) as f64;
    println!(
        "run: {} queries, mean {:.0} us/query -> {}",
        topics.len(),
        mean_us,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MetricKind {
    Ndcg,
    Map,
    Recall,
}

#[derive(Debug, Clone)]
struct MetricSpec {
    label: String,
    kind: MetricKind,
    cutoff: usize,
}

fn parse_cutoff(s: &str) -> Option<usize> {
    if let Some(thousands) = s.strip_suffix(['k', 'K']) {
        thousands.parse::<usize>().ok().map(|v| v * 1000)
    } else {
        s.parse().ok()
    }
}

fn parse_metrics(spec: &str) -> Result<Vec<MetricSpec>, CliError> {
    let mut out = Vec::new();
    for part in spec.split(',').filter(|p| !p.is_empty()) {
        let lower = part.to_lowercase();
        let (name, cutoff) = match lower.split_once('@') {
            Some((name, cut)) => (
                name.to_string(),
                Some(parse_cutoff(cut).ok_or_else(|| usage(format!("bad metric cutoff in {part:?}")))?),
            ),
            None => (lower.clone(), None),
        };
        let (kind, default_cutoff) = match name.as_str() {
            "ndcg" => (MetricKind::Ndcg, 10),
            "map" => (MetricKind::Map, 1000),
            "r" | "recall" => (MetricKind::Recall, 1000),
            other => return Err(usage(format!("unknown metric {other:?}"))),
        };
        let cutoff = cutoff.unwrap_or(default_cutoff);
        if cutoff == 0 {
            return Err(usage(format!("metric cutoff must be at least 1 in {part:?}")));
        }
        out.push(MetricSpec {
            label: part.to_string(),
            kind,
            cutoff,
        });
    }
    if out.is_empty() {
        return Err(usage("--metrics must name at least one metric"));
    }
    Ok(out)
}

fn compute_metric(
    spec: &MetricSpec,
    run: &RunFile,
    qrels: &oprf_core::Qrels,
    threshold: u32,
) -> PerQuery {
    match spec.kind {
        MetricKind::Ndcg => ndcg_at(run, qrels, spec.cutoff),
        MetricKind::Map => map_at(run, qrels, spec.cutoff, threshold),
        MetricKind::Recall => recall_at(run, qrels, spec.cutoff, threshold),
    }
}

/// Two runs may cover different query subsets (a query without matches emits
/// no run lines). For the paired test, score a query missing from one side
/// as 0 for that side.
fn align_for_test(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let qids: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let fill = |m: &BTreeMap<String, f64>| {
        qids.iter()
            .map(|&qid| (qid.clone(), m.get(qid).copied().unwrap_or(0.0)))
            .collect()
    };
    (fill(a), fill(b))
}

fn run_eval(args: EvalArgs) -> CliResult {
    require_exists(&args.run, "run")?;
    require_exists(&args.qrels, "qrels")?;
    if args.sig && args.compare.is_none() {
        return Err(usage("--sig requires --compare"));
    }
    if let Some(compare) = &args.compare {
        require_exists(compare, "compare run")?;
    }
    let specs = parse_metrics(&args.metrics)?;
    let run = read_run(&args.run)?;
    let qrels = load_qrels(&args.qrels)?;
    let metric_cfg = MetricConfig {
        binarization_threshold: args.threshold,
        ..MetricConfig::default()
    };
    let threshold = metric_cfg.resolve_threshold(&qrels);
    let compare = args.compare.as_ref().map(|p| read_run(p)).transpose()?;

    let name_a = args.run.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name_b = args
        .compare
        .as_ref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned());

    let mut csv_lines = Vec::new();
    match &compare {
        None => {
            println!("{:<12} {:>10}", "metric", name_a);
            csv_lines.push(format!("metric,{name_a}"));
            for spec in &specs {
                let a = compute_metric(spec, &run, &qrels, threshold);
                println!("{:<12} {:>10.4}", spec.label, a.mean);
                csv_lines.push(format!("{},{:.6}", spec.label, a.mean));
            }
        }
        Some(run_b) => {
            let name_b = name_b.unwrap_or_default();
            let mut header = format!("{:<12} {:>10} {:>10} {:>10}", "metric", name_a, name_b, "diff");
            let mut csv_header = format!("metric,{name_a},{name_b},diff");
            if args.sig {
                header.push_str(&format!(" {:>10}", "p"));
                csv_header.push_str(",p");
            }
            println!("{header}");
            csv_lines.push(csv_header);
            for spec in &specs {
                let a = compute_metric(spec, &run, &qrels, threshold);
                let b = compute_metric(spec, run_b, &qrels, threshold);
                let diff = a.mean - b.mean;
                let mut line = format!(
                    "{:<12} {:>10.4} {:>10.4} {:>+10.4}",
                    spec.label, a.mean, b.mean, diff
                );
                let mut csv_line = format!(
                    "{},{:.6},{:.6},{:.6}",
                    spec.label, a.mean, b.mean, diff
                );
                if args.sig {
                    let (aligned_a, aligned_b) = align_for_test(&a.per_query, &b.per_query);
                    let outcome = paired_ttest(&aligned_a, &aligned_b)
                        .map_err(|e| CliError::Runtime(e.into()))?;
                    let marker = if outcome.p < 0.05 { "*" } else { "" };
                    line.push_str(&format!(" {:>9.4}{marker}", outcome.p));
                    csv_line.push_str(&format!(",{:.6}", outcome.p));
                }
                println!("{line}");
                csv_lines.push(csv_line);
            }
        }
    }

    if let Some(csv_path) = &args.csv {
        std::fs::write(csv_path, csv_lines.join("\n") + "\n")
            .with_context(|| format!("writing {}", csv_path.display()))
            .map_err(CliError::Runtime)?;
    }

    if !args.timings.is_empty() {
        let mut logs = Vec::new();
        for spec in &args.timings {
            let (name, path) = spec
                .split_once('=')
                .ok_or_else(|| usage(format!("--timing expects name=path, got {spec:?}")))?;
            require_exists(Path::new(path), "timing")?;
            logs.push((name.to_string(), read_timing_csv(Path::new(path))?));
        }
        let baseline = args
            .timing_baseline
            .clone()
            .unwrap_or_else(|| logs[0].0.clone());
        let report = latency_report(&logs, &baseline)?;
        println!();
        println!(
            "{:<12} {:<10} {:>12} {:>12} {:>12} {:>9}",
            "run", "phase", "mean_us", "p50_us", "p95_us", "multiple"
        );
        for summary in &report {
            for (phase, stats) in PHASES.iter().zip(&summary.phases) {
                let multiple = if *phase == "total" {
                    format!("{:.2}x", summary.multiple)
                } else {
                    String::new()
                };
                println!(
                    "{:<12} {:<10} {:>12.1} {:>12.1} {:>12.1} {:>9}",
                    summary.name, phase, stats.mean, stats.p50, stats.p95, multiple
                );
            }
        }
    }
    Ok(())
}

fn run_sweep_cmd(args: SweepArgs) -> CliResult {
    require_exists(&args.store, "store")?;
    require_exists(&args.pq_index, "pq-index")?;
    require_exists(&args.corpus, "corpus")?;
    require_exists(&args.topics, "topics")?;
    require_exists(&args.qrels, "qrels")?;

    let param = match args.param.as_str() {
        "s" => SweepParam::S,
        "k" | "k_truncation" => SweepParam::KTruncation,
        "m" | "m_subset" => SweepParam::MSubset,
        other => return Err(usage(format!("unknown sweep parameter {other:?}"))),
    };
    if param == SweepParam::MSubset && args.pseudo_queries.is_none() {
        return Err(usage("the m sweep requires --pseudo-queries"));
    }
    let values: Vec<usize> = args
        .values
        .split(',')
        .filter(|v| !v.is_empty())
        .map(|v| v.trim().parse().map_err(|_| usage(format!("bad sweep value {v:?}"))))
        .collect::<Result<_, _>>()?;
    let spec = SweepSpec::new(param, values).map_err(|e| usage(e.to_string()))?;

    let store = ResultStore::load(&args.store)?;
    let pq_index = InvertedIndex::load(&args.pq_index)?;
    let corpus = load_corpus(&args.corpus, args.format.into())?;
    let doc_ids = corpus.ext_id_table();
    let topics = load_topics(&args.topics)?;
    let qrels = load_qrels(&args.qrels)?;
    let doc_index = args
        .doc_index
        .as_ref()
        .map(|p| InvertedIndex::load(p))
        .transpose()?;
    let pq_pairs = args
        .pseudo_queries
        .as_ref()
        .map(|p| {
            require_exists(p, "pseudo-queries")?;
            Ok::<_, CliError>(read_pseudo_query_lines(p, &corpus)?)
        })
        .transpose()?;

    let metrics = MetricConfig {
        binarization_threshold: args.threshold,
        ..MetricConfig::default()
    };
    let assets = SweepAssets {
        store: &store,
        pq_index: &pq_index,
        doc_ids: &doc_ids,
        doc_index: doc_index.as_ref(),
        topics: &topics,
        qrels: &qrels,
        config: OnlineConfig {
            s: args.s,
            fuse_original: args.fuse_original,
            softmax_temperature: args.temperature,
            original_sparse: sparse_config(args.rm3, 10, 10, 0.5, 0.9, 0.4),
        },
        metrics,
        pq_pairs: pq_pairs.as_deref(),
        tag: args.tag.clone(),
    };

    let points = run_sweep(&spec, &assets)?;
    println!(
        "{:<8} {:>10} {:>10} {:>10} {:>14}",
        "value", "ndcg@10", "map", "r@1k", "latency_us"
    );
    let mut csv = String::from("value,ndcg@10,map,r@1k,mean_latency_us\n");
    for p in &points {
        println!(
            "{:<8} {:>10.4} {:>10.4} {:>10.4} {:>14.1}",
            p.value, p.ndcg, p.map, p.recall, p.mean_latency_us
        );
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.1}\n",
            p.value, p.ndcg, p.map, p.recall, p.mean_latency_us
        ));
    }
    if let Some(out) = &args.out {
        std::fs::write(out, csv)
            .with_context(|| format!("writing {}", out.display()))
            .map_err(CliError::Runtime)?;
    }
    Ok(())
}
