//! Hyperparameter sweeps over the online/offline knobs.
//!
//! Three axes: pseudo-queries matched per query (s), stored-list depth
//! (k, explored by truncating the store rather than re-preparing), and the
//! per-document generation budget (m, explored by re-deduplicating a prefix
//! of each document's pseudo-queries and restricting the store to the
//! survivors). Points run sequentially so latency numbers are not polluted
//! by co-scheduling.

use std::collections::HashMap;

use crate::corpus::{dedup_pseudo_queries, Qrels, RunFile, Topic};
use crate::error::{Error, Result};
use crate::eval::latency::TimingRow;
use crate::eval::metrics::{map_at, ndcg_at, recall_at, MetricConfig};
use crate::lexical::{InvertedIndex, Tokenizer};
use crate::offline::ResultStore;
use crate::online::{OnlineConfig, SearchEngine};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Pseudo-queries returned online.
    S,
    /// Documents retrieved per pseudo-query offline (store truncation).
    KTruncation,
    /// Pseudo-queries generated per document (prefix subset).
    MSubset,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<usize>,
}

impl SweepSpec {
    pub fn new(param: SweepParam, values: Vec<usize>) -> Result<SweepSpec> {
        if values.is_empty() {
            return Err(Error::invalid("sweep needs at least one value"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sweep values must be strictly increasing"));
        }
        Ok(SweepSpec { param, values })
    }
}

/// Everything a sweep point needs to run: the full-size artifacts plus the
/// fixed configuration snapshot.
pub struct SweepAssets<'a> {
    pub store: &'a ResultStore,
    pub pq_index: &'a InvertedIndex,
    pub doc_ids: &'a [String],
    pub doc_index: Option<&'a InvertedIndex>,
    pub topics: &'a [Topic],
    pub qrels: &'a Qrels,
    pub config: OnlineConfig,
    pub metrics: MetricConfig,
    /// Raw `(source ordinal, text)` pseudo-query pairs in file order; only
    /// required for the m sweep.
    pub pq_pairs: Option<&'a [(u32, String)]>,
    pub tag: String,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub value: usize,
    pub ndcg: f64,
    pub map: f64,
    pub recall: f64,
    pub mean_latency_us: f64,
}

pub fn run_sweep(spec: &SweepSpec, assets: &SweepAssets) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let point = match spec.param {
            SweepParam::S => {
                let mut config = assets.config.clone();
                config.s = value;
                evaluate_point(value, assets.store, assets.pq_index, config, assets)?
            }
            SweepParam::KTruncation => {
                let store = assets.store.truncated(value).map_err(|_| {
                    Error::invalid(format!(
                        "k sweep value {value} exceeds stored k {}",
                        assets.store.k
                    ))
                })?;
                evaluate_point(value, &store, assets.pq_index, assets.config.clone(), assets)?
            }
            SweepParam::MSubset => {
                let pairs = assets.pq_pairs.ok_or_else(|| {
                    Error::invalid("m sweep requires the raw pseudo-query pairs")
                })?;
                let (store, index) = subset_by_budget(assets.store, pairs, value)?;
                evaluate_point(value, &store, &index, assets.config.clone(), assets)?
            }
        };
        out.push(point);
    }
    Ok(out)
}

/// Restrict the store to the pseudo-queries surviving a per-document budget
/// of `m`: take the first `m` lines of each source document, re-deduplicate,
/// and keep the stored lists of the survivors under fresh dense ids.
fn subset_by_budget(
    store: &ResultStore,
    pairs: &[(u32, String)],
    m: usize,
) -> Result<(ResultStore, InvertedIndex)> {
    let max_per_doc = {
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for &(source, _) in pairs {
            *counts.entry(source).or_insert(0) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    };
    if m > max_per_doc {
        return Err(Error::invalid(format!(
            "m sweep value {m} exceeds the available {max_per_doc} pseudo-queries per document"
        )));
    }

    let mut taken: HashMap<u32, usize> = HashMap::new();
    let kept = pairs.iter().filter(|&&(source, _)| {
        let n = taken.entry(source).or_insert(0);
        *n += 1;
        *n <= m
    });
    let subset = dedup_pseudo_queries(kept.cloned());

    let full_id_by_text: HashMap<&str, u32> = store
        .pq_texts()
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();
    let mut full_ids = Vec::with_capacity(subset.len());
    for pq in &subset {
        let id = full_id_by_text.get(pq.text.as_str()).ok_or_else(|| {
            Error::invalid(format!(
                "pseudo-query {:?} not present in the store; was it built from the same file?",
                pq.text
            ))
        })?;
        full_ids.push(*id);
    }

    let sub_store = store.subset(&full_ids)?;
    let index = InvertedIndex::build(
        subset.iter().map(|pq| (pq.pq_id, pq.text.as_str())),
        Tokenizer::english(),
    )?;
    Ok((sub_store, index))
}

fn evaluate_point(
    value: usize,
    store: &ResultStore,
    pq_index: &InvertedIndex,
    config: OnlineConfig,
    assets: &SweepAssets,
) -> Result<SweepPoint> {
    let engine = SearchEngine::new(store, pq_index, assets.doc_ids, assets.doc_index, config)?;
    let mut run = RunFile::new(assets.tag.clone());
    let mut timings: Vec<TimingRow> = Vec::with_capacity(assets.topics.len());
    for topic in assets.topics {
        let output = engine.search(&topic.text)?;
        run.add_ranking(&topic.qid, output.ranked)?;
        timings.push(TimingRow {
            qid: topic.qid.clone(),
            timing: output.timing,
        });
    }
    let threshold = assets.metrics.resolve_threshold(assets.qrels);
    let ndcg = ndcg_at(&run, assets.qrels, assets.metrics.ndcg_cutoff).mean;
    let map = map_at(&run, assets.qrels, assets.metrics.map_cutoff, threshold).mean;
    let recall = recall_at(&run, assets.qrels, assets.metrics.recall_cutoff, threshold).mean;
    let mean_latency_us = timings
        .iter()
        .map(|t| t.timing.total_us as f64)
        .sum::<f64>()
        / timings.len().max(1) as f64;
    Ok(SweepPoint {
        value,
        ndcg,
        map,
        recall,
        mean_latency_us,
    })
}
