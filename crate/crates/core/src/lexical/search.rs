//! BM25 scoring and ranked retrieval.
//!
//! Lucene-flavored variant: `idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5))`,
//! which is strictly positive for every indexed term, with `k1 = 0.9` and
//! `b = 0.4` defaults. Ties are broken by ascending ordinal so every ranking
//! is byte-reproducible.

use std::collections::{BTreeMap, HashMap};

use crate::lexical::index::InvertedIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

/// A term → weight query, e.g. the output of RM3 expansion.
pub type WeightedQuery = BTreeMap<String, f64>;

pub fn idf(index: &InvertedIndex, term: &str) -> f64 {
    let n = index.n_items() as f64;
    let df = index.doc_freq(term) as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

fn tf_norm(params: &Bm25Params, tf: f64, doc_len: f64, avg_len: f64) -> f64 {
    let len_ratio = if avg_len > 0.0 { doc_len / avg_len } else { 0.0 };
    tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * len_ratio))
}

/// BM25 score of one item for a tokenized query. Tokens absent from the item
/// contribute zero; duplicated query tokens contribute once per occurrence.
pub fn bm25_score(
    index: &InvertedIndex,
    params: &Bm25Params,
    query_tokens: &[String],
    ordinal: u32,
) -> f64 {
    let doc_len = index.doc_length(ordinal) as f64;
    let avg_len = index.avg_doc_length();
    let mut score = 0.0;
    for token in query_tokens {
        let Some(plist) = index.postings(token) else {
            continue;
        };
        let Ok(pos) = plist.binary_search_by_key(&ordinal, |&(o, _)| o) else {
            continue;
        };
        let tf = plist[pos].1 as f64;
        score += idf(index, token) * tf_norm(params, tf, doc_len, avg_len);
    }
    score
}

/// Top-`top_n` items by BM25, sorted by (score desc, ordinal asc).
/// Zero-scoring items are never returned.
pub fn bm25_search(
    index: &InvertedIndex,
    params: &Bm25Params,
    query_text: &str,
    top_n: usize,
) -> Vec<(u32, f64)> {
    let tokens = index.tokenizer().tokenize(query_text);
    let weighted: Vec<(&str, f64)> = tokens.iter().map(|t| (t.as_str(), 1.0)).collect();
    ranked_scan(index, params, &weighted, top_n)
}

/// As [`bm25_search`], with each term's contribution scaled by its weight.
pub fn weighted_search(
    index: &InvertedIndex,
    params: &Bm25Params,
    query: &WeightedQuery,
    top_n: usize,
) -> Vec<(u32, f64)> {
    let weighted: Vec<(&str, f64)> = query.iter().map(|(t, &w)| (t.as_str(), w)).collect();
    ranked_scan(index, params, &weighted, top_n)
}

fn ranked_scan(
    index: &InvertedIndex,
    params: &Bm25Params,
    terms: &[(&str, f64)],
    top_n: usize,
) -> Vec<(u32, f64)> {
    let avg_len = index.avg_doc_length();
    let mut scores: HashMap<u32, f64> = HashMap::new();
    for &(term, weight) in terms {
        let Some(plist) = index.postings(term) else {
            continue;
        };
        let term_idf = idf(index, term);
        for &(ordinal, tf) in plist {
            let doc_len = index.doc_length(ordinal) as f64;
            let contribution =
                weight * term_idf * tf_norm(params, tf as f64, doc_len, avg_len);
            *scores.entry(ordinal).or_insert(0.0) += contribution;
        }
    }
    let mut ranked: Vec<(u32, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(top_n);
    ranked
}
