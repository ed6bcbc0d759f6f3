//! Online retrieval: substitute the live query with its closest
//! pseudo-queries and aggregate their precomputed result lists.
//!
//! A query is answered in four phases: BM25 match against the pseudo-query
//! collection (top-s), gather of the stored lists into a candidate set,
//! optional sparse fusion of the original query, and min-max normalization
//! followed by a softmax-weighted sum over (pseudo-query, model) columns.
//! The engine holds no embedding matrices: serving never touches document
//! vectors.

use std::collections::HashMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::lexical::{bm25_search, rm3_expand, weighted_search, Bm25Params, InvertedIndex, Rm3Params};
use crate::offline::ResultStore;

/// Sparse retriever settings for original-query fusion.
#[derive(Debug, Clone, Default)]
pub struct SparseConfig {
    pub bm25: Bm25Params,
    pub rm3: Rm3Params,
    pub use_rm3: bool,
}

#[derive(Debug, Clone)]
pub struct OnlineConfig {
    /// Pseudo-queries substituted for each live query.
    pub s: usize,
    pub fuse_original: bool,
    pub softmax_temperature: f64,
    pub original_sparse: SparseConfig,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            s: 4,
            fuse_original: false,
            softmax_temperature: 1.0,
            original_sparse: SparseConfig::default(),
        }
    }
}

/// Top-`s` pseudo-queries by BM25 over the pseudo-query index. May return
/// fewer than `s` when fewer match; an empty result means no pseudo-query
/// shares a term with the query.
pub fn select_pseudo_queries(
    pq_index: &InvertedIndex,
    bm25: &Bm25Params,
    query_text: &str,
    s: usize,
) -> Vec<(u32, f64)> {
    bm25_search(pq_index, bm25, query_text, s)
}

/// The union R_q of the stored lists of the selected pseudo-queries, with
/// one optional score slot per (pseudo-query, model) column. Slots absent
/// from a stored list stay missing; they are never zero-filled here.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    /// `(pq_id, sim(q, q̄))` in selection order.
    pub selected: Vec<(u32, f64)>,
    /// Similarities driving the softmax weights: one per selected
    /// pseudo-query, plus one for the fused original query when present.
    weight_sims: Vec<f64>,
    /// Column → index into `weight_sims`.
    column_weight: Vec<usize>,
    n_models: usize,
    rows: Vec<(u32, Vec<Option<f64>>)>,
    normalized: bool,
}

impl CandidateSet {
    /// Number of candidate documents (r).
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.column_weight.len()
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, &[Option<f64>])> {
        self.rows.iter().map(|(ordinal, slots)| (*ordinal, slots.as_slice()))
    }

    /// Assemble a candidate set directly from raw parts: per-pseudo-query
    /// similarities and, for each, one stored list per model. Used by the
    /// gather step and by tests that need hand-built instances.
    pub fn from_lists(selected: Vec<(u32, f64)>, lists: &[Vec<&[(u32, f32)]>]) -> CandidateSet {
        assert_eq!(selected.len(), lists.len());
        let n_models = lists.first().map_or(0, |per_pq| per_pq.len());
        let n_columns = selected.len() * n_models;
        let mut row_of: HashMap<u32, usize> = HashMap::new();
        let mut rows: Vec<(u32, Vec<Option<f64>>)> = Vec::new();
        for (sel_idx, per_pq) in lists.iter().enumerate() {
            assert_eq!(per_pq.len(), n_models);
            for (model_idx, list) in per_pq.iter().enumerate() {
                let column = sel_idx * n_models + model_idx;
                for &(ordinal, score) in *list {
                    let row = *row_of.entry(ordinal).or_insert_with(|| {
                        rows.push((ordinal, vec![None; n_columns]));
                        rows.len() - 1
                    });
                    rows[row].1[column] = Some(score as f64);
                }
            }
        }
        rows.sort_by_key(|&(ordinal, _)| ordinal);
        CandidateSet {
            weight_sims: selected.iter().map(|&(_, sim)| sim).collect(),
            column_weight: (0..selected.len())
                .flat_map(|i| std::iter::repeat_n(i, n_models))
                .collect(),
            selected,
            n_models,
            rows,
            normalized: false,
        }
    }

    /// Min-max normalize each column over the candidates that hold a score
    /// in it. A column with max = min (including single-entry columns) maps
    /// every present score to 1.0. Missing slots remain missing.
    pub fn normalize_minmax(&mut self) {
        for column in 0..self.column_weight.len() {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            let mut any = false;
            for (_, slots) in &self.rows {
                if let Some(v) = slots[column] {
                    min = min.min(v);
                    max = max.max(v);
                    any = true;
                }
            }
            if !any {
                continue;
            }
            let range = max - min;
            for (_, slots) in self.rows.iter_mut() {
                if let Some(v) = slots[column] {
                    slots[column] = Some(if range > 0.0 { (v - min) / range } else { 1.0 });
                }
            }
        }
        self.normalized = true;
    }

    /// Softmax-weighted sum across columns; missing slots contribute zero.
    /// Expects [`normalize_minmax`](Self::normalize_minmax) to have run.
    /// Output is sorted by (score desc, ordinal asc).
    pub fn aggregate(&self, temperature: f64) -> Vec<(u32, f64)> {
        debug_assert!(self.normalized, "aggregate expects normalized columns");
        if self.rows.is_empty() {
            return Vec::new();
        }
        let weights = softmax_weights(&self.weight_sims, temperature);
        let mut ranked: Vec<(u32, f64)> = self
            .rows
            .iter()
            .map(|(ordinal, slots)| {
                let score: f64 = slots
                    .iter()
                    .enumerate()
                    .filter_map(|(col, slot)| slot.map(|v| weights[self.column_weight[col]] * v))
                    .sum();
                (*ordinal, score)
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        ranked
    }

    /// Fold an on-the-fly sparse run for the original query into the set.
    /// The original query joins the weighting as a virtual pseudo-query
    /// whose similarity is the maximum selected similarity (1.0 when nothing
    /// was selected); its scores occupy one new column and are normalized
    /// like any other.
    pub fn fuse_original(&mut self, sparse_run: &[(u32, f64)]) {
        let sim = self
            .weight_sims
            .iter()
            .take(self.selected.len())
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let sim = if sim.is_finite() { sim } else { 1.0 };
        self.weight_sims.push(sim);
        let weight_idx = self.weight_sims.len() - 1;
        self.column_weight.push(weight_idx);
        let column = self.column_weight.len() - 1;
        for (_, slots) in self.rows.iter_mut() {
            slots.push(None);
        }
        let mut row_of: HashMap<u32, usize> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, &(ordinal, _))| (ordinal, i))
            .collect();
        for &(ordinal, score) in sparse_run {
            let row = *row_of.entry(ordinal).or_insert_with(|| {
                self.rows.push((ordinal, vec![None; column + 1]));
                self.rows.len() - 1
            });
            self.rows[row].1[column] = Some(score);
        }
        self.rows.sort_by_key(|&(ordinal, _)| ordinal);
    }
}

/// Gather the stored lists of the selected pseudo-queries across all models.
pub fn gather_candidates(store: &ResultStore, selected: &[(u32, f64)]) -> Result<CandidateSet> {
    let n_models = store.n_models();
    let mut lists: Vec<Vec<&[(u32, f32)]>> = Vec::with_capacity(selected.len());
    for &(pq_id, _) in selected {
        if !store.contains_pq(pq_id) {
            return Err(Error::UnknownPqId(pq_id));
        }
        let per_pq: Vec<&[(u32, f32)]> = (0..n_models)
            .map(|m| store.list(pq_id, m).expect("pq bounds checked"))
            .collect();
        lists.push(per_pq);
    }
    Ok(CandidateSet::from_lists(selected.to_vec(), &lists))
}

/// Max-shifted softmax; weights are positive and sum to 1.
pub fn softmax_weights(sims: &[f64], temperature: f64) -> Vec<f64> {
    assert!(temperature > 0.0, "softmax temperature must be positive");
    if sims.is_empty() {
        return Vec::new();
    }
    let max = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = sims.iter().map(|&s| ((s - max) / temperature).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Wall-clock phase breakdown of one search, in microseconds.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchTiming {
    pub match_us: u64,
    pub gather_us: u64,
    pub aggregate_us: u64,
    pub sparse_us: u64,
    pub total_us: u64,
}

#[derive(Debug, Clone)]
pub struct SearchOutput {
    /// `(ext_id, score)` sorted by (score desc, ordinal asc).
    pub ranked: Vec<(String, f64)>,
    pub timing: SearchTiming,
    /// Pseudo-queries actually matched; zero means the query fell through
    /// (and, without fusion, returned nothing).
    pub matched: usize,
}

/// A loaded, immutable serving stack: result store, pseudo-query index, the
/// ordinal → external-ID table, and (only when fusing) a document index.
/// Holds no embedding handles by construction.
pub struct SearchEngine<'a> {
    store: &'a ResultStore,
    pq_index: &'a InvertedIndex,
    doc_ids: &'a [String],
    doc_index: Option<&'a InvertedIndex>,
    match_bm25: Bm25Params,
    pub config: OnlineConfig,
}

impl<'a> SearchEngine<'a> {
    pub fn new(
        store: &'a ResultStore,
        pq_index: &'a InvertedIndex,
        doc_ids: &'a [String],
        doc_index: Option<&'a InvertedIndex>,
        config: OnlineConfig,
    ) -> Result<SearchEngine<'a>> {
        if config.fuse_original && doc_index.is_none() {
            return Err(Error::invalid(
                "original-query fusion requires a document index",
            ));
        }
        if config.s == 0 {
            return Err(Error::invalid("s must be at least 1"));
        }
        Ok(SearchEngine {
            store,
            pq_index,
            doc_ids,
            doc_index,
            match_bm25: Bm25Params::default(),
            config,
        })
    }

    pub fn store(&self) -> &ResultStore {
        self.store
    }

    /// Answer one query: select → gather → (fuse) → normalize → aggregate.
    pub fn search(&self, query_text: &str) -> Result<SearchOutput> {
        let t_start = Instant::now();

        let t = Instant::now();
        let selected =
            select_pseudo_queries(self.pq_index, &self.match_bm25, query_text, self.config.s);
        let match_us = t.elapsed().as_micros() as u64;

        let t = Instant::now();
        let mut candidates = gather_candidates(self.store, &selected)?;
        let gather_us = t.elapsed().as_micros() as u64;

        let mut sparse_us = 0;
        if self.config.fuse_original {
            let t = Instant::now();
            let doc_index = self.doc_index.expect("checked at construction");
            let sparse = &self.config.original_sparse;
            let depth = self.store.k as usize;
            let run: Vec<(u32, f64)> = if sparse.use_rm3 {
                let expanded = rm3_expand(doc_index, &sparse.rm3, &sparse.bm25, query_text);
                weighted_search(doc_index, &sparse.bm25, &expanded, depth)
            } else {
                bm25_search(doc_index, &sparse.bm25, query_text, depth)
            };
            candidates.fuse_original(&run);
            sparse_us = t.elapsed().as_micros() as u64;
        }

        let t = Instant::now();
        candidates.normalize_minmax();
        let ranked = candidates.aggregate(self.config.softmax_temperature);
        let aggregate_us = t.elapsed().as_micros() as u64;

        let mut named = Vec::with_capacity(ranked.len());
        for (ordinal, score) in ranked {
            let ext_id = self
                .doc_ids
                .get(ordinal as usize)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "store references ordinal {ordinal} beyond the corpus id table"
                    ))
                })?
                .clone();
            named.push((ext_id, score));
        }

        Ok(SearchOutput {
            ranked: named,
            timing: SearchTiming {
                match_us,
                gather_us,
                aggregate_us,
                sparse_us,
                total_us: t_start.elapsed().as_micros() as u64,
            },
            matched: selected.len(),
        })
    }
}
