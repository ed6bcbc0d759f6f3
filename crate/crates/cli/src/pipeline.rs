//! Config-driven orchestration: index → prepare → search → eval.
//!
//! Stage staleness is decided by content hashes of each stage's input files
//! plus its parameters, never by timestamps, so reruns on identical inputs
//! skip cleanly on any checkout. State lives in `<out_dir>/pipeline.state`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;

use oprf_core::hash::Fnv1a;

use crate::{usage, CliError, CliResult, EvalArgs, FormatArg, IndexArgs, PrepareArgs, SearchArgs, StemmerArg};

const ALLOWED_KEYS: &[&str] = &[
    "corpus",
    "format",
    "pseudo_queries",
    "topics",
    "qrels",
    "out_dir",
    "models",
    "k",
    "m",
    "prf",
    "prf_depth",
    "workers",
    "s",
    "temperature",
    "fuse_original",
    "rm3",
    "expand",
    "metrics",
    "threshold",
    "tag",
    "seed",
];

#[derive(Args)]
pub struct PipelineArgs {
    /// Flat key=value config file; every key can be overridden by the flag
    /// of the same name.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long)]
    pseudo_queries: Option<PathBuf>,
    #[arg(long)]
    topics: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    models: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    prf: Option<String>,
    #[arg(long)]
    prf_depth: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    fuse_original: Option<bool>,
    #[arg(long)]
    rm3: Option<bool>,
    #[arg(long)]
    expand: Option<bool>,
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    threshold: Option<u32>,
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Debug, Clone)]
struct PipelineConfig {
    corpus: PathBuf,
    format: FormatArg,
    pseudo_queries: PathBuf,
    topics: PathBuf,
    qrels: PathBuf,
    out_dir: PathBuf,
    models: String,
    k: usize,
    m: u32,
    prf: String,
    prf_depth: usize,
    workers: usize,
    s: usize,
    temperature: f64,
    fuse_original: bool,
    rm3: bool,
    expand: bool,
    metrics: String,
    threshold: Option<u32>,
    tag: String,
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let contents = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Runtime)?;
    let mut map = BTreeMap::new();
    for (idx, line) in contents.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), idx + 1)))?;
        let key = key.trim().to_string();
        if !ALLOWED_KEYS.contains(&key.as_str()) {
            return Err(usage(format!(
                "{}:{}: unknown config key {key:?}",
                path.display(),
                idx + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: String) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| usage(format!("config key {key}: bad number {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(usage(format!("config key {key}: bad boolean {other:?}"))),
    }
}

fn resolve_config(args: &PipelineArgs) -> Result<PipelineConfig, CliError> {
    let map = parse_config_file(&args.config)?;
    let get = |key: &str| map.get(key).cloned();
    let required_path = |key: &str, flag: &Option<PathBuf>| -> Result<PathBuf, CliError> {
        flag.clone()
            .or_else(|| get(key).map(PathBuf::from))
            .ok_or_else(|| usage(format!("config key {key} is required")))
    };

    let format = match &args.format {
        Some(f) => *f,
        None => match get("format").as_deref() {
            None | Some("tsv") => FormatArg::Tsv,
            Some("jsonl") => FormatArg::Jsonl,
            Some(other) => return Err(usage(format!("config key format: unknown value {other:?}"))),
        },
    };
    Ok(PipelineConfig {
        corpus: required_path("corpus", &args.corpus)?,
        format,
        pseudo_queries: required_path("pseudo_queries", &args.pseudo_queries)?,
        topics: required_path("topics", &args.topics)?,
        qrels: required_path("qrels", &args.qrels)?,
        out_dir: required_path("out_dir", &args.out_dir)?,
        models: args
            .models
            .clone()
            .or_else(|| get("models"))
            .ok_or_else(|| usage("config key models is required"))?,
        k: match args.k {
            Some(v) => v,
            None => get("k").map(|v| parse_num("k", v)).transpose()?.unwrap_or(1000),
        },
        m: match args.m {
            Some(v) => v,
            None => get("m").map(|v| parse_num("m", v)).transpose()?.unwrap_or(80),
        },
        prf: args.prf.clone().or_else(|| get("prf")).unwrap_or_else(|| "avg".to_string()),
        prf_depth: match args.prf_depth {
            Some(v) => v,
            None => get("prf_depth").map(|v| parse_num("prf_depth", v)).transpose()?.unwrap_or(3),
        },
        workers: match args.workers {
            Some(v) => v,
            None => get("workers").map(|v| parse_num("workers", v)).transpose()?.unwrap_or(1),
        },
        s: match args.s {
            Some(v) => v,
            None => get("s").map(|v| parse_num("s", v)).transpose()?.unwrap_or(4),
        },
        temperature: match args.temperature {
            Some(v) => v,
            None => get("temperature")
                .map(|v| parse_num("temperature", v))
                .transpose()?
                .unwrap_or(1.0),
        },
        fuse_original: match args.fuse_original {
            Some(v) => v,
            None => get("fuse_original")
                .map(|v| parse_bool("fuse_original", &v))
                .transpose()?
                .unwrap_or(false),
        },
        rm3: match args.rm3 {
            Some(v) => v,
            None => get("rm3").map(|v| parse_bool("rm3", &v)).transpose()?.unwrap_or(false),
        },
        expand: match args.expand {
            Some(v) => v,
            None => get("expand").map(|v| parse_bool("expand", &v)).transpose()?.unwrap_or(false),
        },
        metrics: args
            .metrics
            .clone()
            .or_else(|| get("metrics"))
            .unwrap_or_else(|| "ndcg@10,map,r@1k".to_string()),
        threshold: match args.threshold {
            Some(v) => Some(v),
            None => get("threshold").map(|v| parse_num("threshold", v)).transpose()?,
        },
        tag: args.tag.clone().or_else(|| get("tag")).unwrap_or_else(|| "oprf".to_string()),
    })
}

struct Stage {
    name: &'static str,
    inputs: Vec<PathBuf>,
    params: String,
    outputs: Vec<PathBuf>,
}

impl Stage {
    /// Content hash over input files and parameters; `None` while any input
    /// is still missing (e.g. produced by an upstream stage).
    fn current_hash(&self) -> Option<u64> {
        let mut h = Fnv1a::new();
        h.update_str(self.name).update_str(&self.params);
        for input in &self.inputs {
            let bytes = std::fs::read(input).ok()?;
            h.update_u64(bytes.len() as u64).update(&bytes);
        }
        Some(h.finish())
    }

    fn outputs_exist(&self) -> bool {
        self.outputs.iter().all(|p| p.exists())
    }
}

fn load_state(path: &Path) -> BTreeMap<String, u64> {
    let mut state = BTreeMap::new();
    if let Ok(contents) = std::fs::read_to_string(path) {
        for line in contents.lines() {
            if let Some((name, hash)) = line.split_once('\t') {
                if let Ok(hash) = u64::from_str_radix(hash, 16) {
                    state.insert(name.to_string(), hash);
                }
            }
        }
    }
    state
}

fn save_state(path: &Path, state: &BTreeMap<String, u64>) -> CliResult {
    let mut contents = String::new();
    for (name, hash) in state {
        writeln!(contents, "{name}\t{hash:016x}").unwrap();
    }
    std::fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Runtime)
}

pub fn run_pipeline(args: PipelineArgs) -> CliResult {
    require_config_exists(&args.config)?;
    let cfg = resolve_config(&args)?;
    for (path, what) in [
        (&cfg.corpus, "corpus"),
        (&cfg.pseudo_queries, "pseudo_queries"),
        (&cfg.topics, "topics"),
        (&cfg.qrels, "qrels"),
    ] {
        crate::require_exists(path, what)?;
    }
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))
        .map_err(CliError::Runtime)?;

    let pq_index = cfg.out_dir.join("pq.idx");
    let doc_index = cfg.out_dir.join("docs.idx");
    let store = cfg.out_dir.join("store.sto");
    let run_file = cfg.out_dir.join("run.trec");
    let timings = cfg.out_dir.join("timings.csv");
    let metrics_csv = cfg.out_dir.join("metrics.csv");
    let state_path = cfg.out_dir.join("pipeline.state");

    // `@doc-index` in a model spec resolves to the index built by stage 1.
    let models_resolved = cfg.models.replace("@doc-index", &doc_index.to_string_lossy());
    let model_inputs: Vec<PathBuf> = crate::models::parse_models(&models_resolved)
        .map_err(|e| usage(e.to_string()))?
        .iter()
        .flat_map(|m| m.paths().into_iter().map(Path::to_path_buf))
        .collect();

    let stages = [
        Stage {
            name: "index",
            inputs: vec![cfg.corpus.clone(), cfg.pseudo_queries.clone()],
            params: format!("format={:?} expand={}", cfg.format, cfg.expand),
            outputs: vec![pq_index.clone(), doc_index.clone()],
        },
        Stage {
            name: "prepare",
            inputs: {
                let mut v = vec![cfg.corpus.clone(), cfg.pseudo_queries.clone()];
                v.extend(model_inputs.iter().cloned());
                v
            },
            // Worker count is excluded: output is partition-invariant.
            params: format!(
                "k={} m={} prf={} prf_depth={} models={}",
                cfg.k, cfg.m, cfg.prf, cfg.prf_depth, models_resolved
            ),
            outputs: vec![store.clone()],
        },
        Stage {
            name: "search",
            inputs: {
                let mut v = vec![store.clone(), pq_index.clone(), cfg.corpus.clone(), cfg.topics.clone()];
                if cfg.fuse_original {
                    v.push(doc_index.clone());
                }
                v
            },
            params: format!(
                "s={} temperature={} fuse_original={} rm3={} tag={}",
                cfg.s, cfg.temperature, cfg.fuse_original, cfg.rm3, cfg.tag
            ),
            outputs: vec![run_file.clone(), timings.clone()],
        },
        Stage {
            name: "eval",
            inputs: vec![run_file.clone(), cfg.qrels.clone()],
            params: format!("metrics={} threshold={:?}", cfg.metrics, cfg.threshold),
            outputs: vec![metrics_csv.clone()],
        },
    ];

    let mut state = load_state(&state_path);

    println!("stage plan:");
    let mut upstream_runs = false;
    for stage in &stages {
        let status = match stage.current_hash() {
            Some(h) if state.get(stage.name) == Some(&h) && stage.outputs_exist() => {
                if upstream_runs {
                    "recheck after upstream"
                } else {
                    "skip (up to date)"
                }
            }
            Some(_) => {
                upstream_runs = true;
                "run (inputs or parameters changed)"
            }
            None => {
                upstream_runs = true;
                "run (inputs not built yet)"
            }
        };
        println!("  {:<8} {status}", stage.name);
    }

    for stage in &stages {
        let hash = stage.current_hash();
        if let Some(h) = hash {
            if state.get(stage.name) == Some(&h) && stage.outputs_exist() {
                println!("[{}] skipped, up to date", stage.name);
                continue;
            }
        }
        println!("[{}] running", stage.name);
        match stage.name {
            "index" => crate::run_index(IndexArgs {
                corpus: cfg.corpus.clone(),
                format: cfg.format,
                pseudo_queries: Some(cfg.pseudo_queries.clone()),
                pq_index: Some(pq_index.clone()),
                doc_index: Some(doc_index.clone()),
                expand: cfg.expand,
                stemmer: StemmerArg::Porter,
            })?,
            "prepare" => crate::run_prepare(PrepareArgs {
                corpus: cfg.corpus.clone(),
                format: cfg.format,
                pseudo_queries: cfg.pseudo_queries.clone(),
                store: store.clone(),
                k: cfg.k,
                m: cfg.m,
                models: models_resolved.clone(),
                prf: match cfg.prf.as_str() {
                    "avg" => crate::PrfArg::Avg,
                    "none" => crate::PrfArg::None,
                    other => return Err(usage(format!("config key prf: unknown value {other:?}"))),
                },
                prf_depth: cfg.prf_depth,
                workers: cfg.workers,
                k1: 0.9,
                b: 0.4,
            })?,
            "search" => crate::run_search(SearchArgs {
                store: store.clone(),
                pq_index: pq_index.clone(),
                corpus: cfg.corpus.clone(),
                format: cfg.format,
                topics: cfg.topics.clone(),
                s: cfg.s,
                temperature: cfg.temperature,
                fuse_original: cfg.fuse_original,
                doc_index: cfg.fuse_original.then(|| doc_index.clone()),
                rm3: cfg.rm3,
                fb_docs: 10,
                fb_terms: 10,
                orig_weight: 0.5,
                k1: 0.9,
                b: 0.4,
                out: run_file.clone(),
                timing: Some(timings.clone()),
                tag: cfg.tag.clone(),
            })?,
            "eval" => crate::run_eval(EvalArgs {
                run: run_file.clone(),
                qrels: cfg.qrels.clone(),
                metrics: cfg.metrics.clone(),
                threshold: cfg.threshold,
                compare: None,
                sig: false,
                csv: Some(metrics_csv.clone()),
                timings: Vec::new(),
                timing_baseline: None,
            })?,
            _ => unreachable!(),
        }
        let finished = stage.current_hash().ok_or_else(|| {
            CliError::Runtime(anyhow::anyhow!(
                "stage {} finished but its inputs are unreadable",
                stage.name
            ))
        })?;
        state.insert(stage.name.to_string(), finished);
        save_state(&state_path, &state)?;
    }
    Ok(())
}

fn require_config_exists(path: &Path) -> CliResult {
    crate::require_exists(path, "config")
}
