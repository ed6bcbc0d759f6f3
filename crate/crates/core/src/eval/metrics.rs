//! Rank-based effectiveness metrics over TREC runs and qrels.
//!
//! nDCG uses the exponential gain `2^grade − 1` with a `log2(rank+1)`
//! discount. MAP and recall binarize grades at a threshold that defaults to
//! 2 for graded judgments and 1 for binary ones.

use std::collections::BTreeMap;

use crate::corpus::{Qrels, RunFile};

#[derive(Debug, Clone, Copy)]
pub struct MetricConfig {
    pub ndcg_cutoff: usize,
    pub recall_cutoff: usize,
    pub map_cutoff: usize,
    /// Minimum grade counted as relevant for MAP/recall. `None` resolves
    /// from the judgments: ≥ 2 when any grade reaches 2, else ≥ 1.
    pub binarization_threshold: Option<u32>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            ndcg_cutoff: 10,
            recall_cutoff: 1000,
            map_cutoff: 1000,
            binarization_threshold: None,
        }
    }
}

impl MetricConfig {
    pub fn resolve_threshold(&self, qrels: &Qrels) -> u32 {
        match self.binarization_threshold {
            Some(t) => t,
            None => {
                if qrels.max_grade() >= 2 {
                    2
                } else {
                    1
                }
            }
        }
    }
}

/// Per-query values plus their mean.
#[derive(Debug, Clone)]
pub struct PerQuery {
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
}

fn finish(per_query: BTreeMap<String, f64>) -> PerQuery {
    let mean = if per_query.is_empty() {
        0.0
    } else {
        per_query.values().sum::<f64>() / per_query.len() as f64
    };
    PerQuery { per_query, mean }
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

/// nDCG@cutoff. Queries without any relevant document score 0 and are
/// counted in the mean.
pub fn ndcg_at(run: &RunFile, qrels: &Qrels, cutoff: usize) -> PerQuery {
    let mut per_query = BTreeMap::new();
    for qid in run.qids() {
        let entries = run.ranking(qid).unwrap_or(&[]);
        let dcg: f64 = entries
            .iter()
            .take(cutoff)
            .enumerate()
            .map(|(i, e)| gain(qrels.grade(qid, &e.ext_id)) / ((i + 2) as f64).log2())
            .sum();
        let mut ideal_grades: Vec<u32> = qrels
            .judged(qid)
            .map(|m| m.values().copied().filter(|&g| g > 0).collect())
            .unwrap_or_default();
        ideal_grades.sort_unstable_by(|a, b| b.cmp(a));
        let idcg: f64 = ideal_grades
            .iter()
            .take(cutoff)
            .enumerate()
            .map(|(i, &g)| gain(g) / ((i + 2) as f64).log2())
            .sum();
        let value = if idcg > 0.0 { dcg / idcg } else { 0.0 };
        per_query.insert(qid.to_string(), value);
    }
    finish(per_query)
}

/// MAP@cutoff with binarization at `threshold`. Average precision divides by
/// the total relevant count, not just the retrieved portion; queries without
/// relevant documents score 0 and are counted.
pub fn map_at(run: &RunFile, qrels: &Qrels, cutoff: usize, threshold: u32) -> PerQuery {
    let mut per_query = BTreeMap::new();
    for qid in run.qids() {
        let total_relevant = qrels
            .judged(qid)
            .map(|m| m.values().filter(|&&g| g >= threshold).count())
            .unwrap_or(0);
        if total_relevant == 0 {
            per_query.insert(qid.to_string(), 0.0);
            continue;
        }
        let entries = run.ranking(qid).unwrap_or(&[]);
        let mut hits = 0usize;
        let mut precision_sum = 0.0;
        for (i, e) in entries.iter().take(cutoff).enumerate() {
            if qrels.grade(qid, &e.ext_id) >= threshold {
                hits += 1;
                precision_sum += hits as f64 / (i + 1) as f64;
            }
        }
        per_query.insert(qid.to_string(), precision_sum / total_relevant as f64);
    }
    finish(per_query)
}

/// Recall@cutoff with binarization at `threshold`. Queries without relevant
/// documents are excluded from the mean entirely.
pub fn recall_at(run: &RunFile, qrels: &Qrels, cutoff: usize, threshold: u32) -> PerQuery {
    let mut per_query = BTreeMap::new();
    for qid in run.qids() {
        let total_relevant = qrels
            .judged(qid)
            .map(|m| m.values().filter(|&&g| g >= threshold).count())
            .unwrap_or(0);
        if total_relevant == 0 {
            continue;
        }
        let entries = run.ranking(qid).unwrap_or(&[]);
        let found = entries
            .iter()
            .take(cutoff)
            .filter(|e| qrels.grade(qid, &e.ext_id) >= threshold)
            .count();
        per_query.insert(qid.to_string(), found as f64 / total_relevant as f64);
    }
    finish(per_query)
}
