//! RM3 relevance-model query expansion.
//!
//! Feedback items from an initial BM25 pass are weighted by their
//! softmax-normalized retrieval scores; the induced term distribution
//! `P(t|R) = Σ_d w_d · tf(t,d)/|d|` is truncated to the strongest terms and
//! interpolated with the original query distribution.

use std::collections::HashMap;

use crate::lexical::index::InvertedIndex;
use crate::lexical::search::{bm25_search, Bm25Params, WeightedQuery};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rm3Params {
    pub fb_docs: usize,
    pub fb_terms: usize,
    /// Interpolation weight of the original query distribution, in [0, 1].
    pub orig_weight: f64,
}

impl Default for Rm3Params {
    fn default() -> Self {
        Rm3Params {
            fb_docs: 10,
            fb_terms: 10,
            orig_weight: 0.5,
        }
    }
}

/// Normalized token-count distribution of the query text.
pub fn query_distribution(index: &InvertedIndex, query_text: &str) -> WeightedQuery {
    let tokens = index.tokenizer().tokenize(query_text);
    let mut dist = WeightedQuery::new();
    if tokens.is_empty() {
        return dist;
    }
    let total = tokens.len() as f64;
    for t in tokens {
        *dist.entry(t).or_insert(0.0) += 1.0 / total;
    }
    dist
}

/// Expand `query_text` against `index`. Returns a term → weight query whose
/// weights are non-negative and sum to 1. With no usable feedback (or
/// `fb_terms = 0`, or `orig_weight = 1`) the original distribution is
/// returned unchanged.
pub fn rm3_expand(
    index: &InvertedIndex,
    params: &Rm3Params,
    bm25: &Bm25Params,
    query_text: &str,
) -> WeightedQuery {
    let original = query_distribution(index, query_text);
    if params.fb_terms == 0 || params.fb_docs == 0 || params.orig_weight >= 1.0 {
        return original;
    }

    let feedback = bm25_search(index, bm25, query_text, params.fb_docs);
    if feedback.is_empty() {
        return original;
    }

    // Softmax over retrieval scores; max-shifted for stability.
    let max_score = feedback.iter().map(|&(_, s)| s).fold(f64::MIN, f64::max);
    let exps: Vec<f64> = feedback.iter().map(|&(_, s)| (s - max_score).exp()).collect();
    let denom: f64 = exps.iter().sum();

    let mut relevance: HashMap<&str, f64> = HashMap::new();
    let doc_weight: HashMap<u32, f64> = feedback
        .iter()
        .zip(&exps)
        .map(|(&(ordinal, _), &e)| (ordinal, e / denom))
        .collect();
    for (term, plist) in index.terms() {
        for &(ordinal, tf) in plist {
            if let Some(&w) = doc_weight.get(&ordinal) {
                let len = index.doc_length(ordinal) as f64;
                if len > 0.0 {
                    *relevance.entry(term).or_insert(0.0) += w * tf as f64 / len;
                }
            }
        }
    }

    let mut fb_terms: Vec<(&str, f64)> = relevance.into_iter().collect();
    fb_terms.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    fb_terms.truncate(params.fb_terms);
    let fb_mass: f64 = fb_terms.iter().map(|&(_, w)| w).sum();
    if fb_mass <= 0.0 {
        return original;
    }

    let mut expanded = WeightedQuery::new();
    for (term, weight) in &original {
        *expanded.entry(term.clone()).or_insert(0.0) += params.orig_weight * weight;
    }
    for (term, weight) in fb_terms {
        *expanded.entry(term.to_string()).or_insert(0.0) +=
            (1.0 - params.orig_weight) * weight / fb_mass;
    }
    expanded
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexical::tokenizer::Tokenizer;

    fn index(items: &[&str]) -> InvertedIndex {
        InvertedIndex::build(
            items.iter().enumerate().map(|(i, t)| (i as u32, *t)),
            Tokenizer::plain(),
        )
        .unwrap()
    }

    #[test]
    fn no_expansion_terms_returns_original() {
        let idx = index(&["a b", "b c"]);
        let params = Rm3Params {
            fb_terms: 0,
            ..Rm3Params::default()
        };
        let out = rm3_expand(&idx, &params, &Bm25Params::default(), "a b");
        assert_eq!(out, query_distribution(&idx, "a b"));
    }

    #[test]
    fn orig_weight_one_returns_original() {
        let idx = index(&["a b", "b c"]);
        let params = Rm3Params {
            orig_weight: 1.0,
            ..Rm3Params::default()
        };
        let out = rm3_expand(&idx, &params, &Bm25Params::default(), "a");
        assert_eq!(out, query_distribution(&idx, "a"));
    }

    #[test]
    fn zero_feedback_returns_original() {
        let idx = index(&["a b", "b c"]);
        // "zz" matches nothing: the original (single-term) distribution
        // comes back untouched.
        let out = rm3_expand(&idx, &Rm3Params::default(), &Bm25Params::default(), "zz");
        assert_eq!(out, query_distribution(&idx, "zz"));
        assert_eq!(out.get("zz"), Some(&1.0));
        // An empty query has an empty distribution and no feedback either.
        let out = rm3_expand(&idx, &Rm3Params::default(), &Bm25Params::default(), "");
        assert!(out.is_empty());
    }

    #[test]
    fn weights_sum_to_one() {
        let idx = index(&["a b c", "a b d", "b d e", "c e", "a a b"]);
        let out = rm3_expand(&idx, &Rm3Params::default(), &Bm25Params::default(), "a b");
        let total: f64 = out.values().sum();
        assert!((total - 1.0).abs() < 1e-9, "sum = {total}");
        assert!(out.values().all(|&w| w >= 0.0));
    }

    #[test]
    fn matches_hand_rolled_relevance_model() {
        // Five tiny docs; fb_docs = 2, fb_terms = 2. The oracle below follows
        // the definition term by term with scalar arithmetic only.
        let docs = ["a b c", "a b d", "b d e", "c e", "a a b"];
        let idx = index(&docs);
        let bm25 = Bm25Params::default();
        let params = Rm3Params {
            fb_docs: 2,
            fb_terms: 2,
            orig_weight: 0.5,
        };
        let query = "a";

        let fb = bm25_search(&idx, &bm25, query, 2);
        assert_eq!(fb.len(), 2);
        let max = fb.iter().map(|&(_, s)| s).fold(f64::MIN, f64::max);
        let e: Vec<f64> = fb.iter().map(|&(_, s)| (s - max).exp()).collect();
        let z: f64 = e.iter().sum();

        // P(t|R) = Σ_d w_d · tf(t,d)/|d|, straight from token counts.
        let mut p_r: Vec<(&str, f64)> = {
            let mut m: std::collections::BTreeMap<&str, f64> = Default::default();
            for (i, &(ordinal, _)) in fb.iter().enumerate() {
                let tokens: Vec<&str> = docs[ordinal as usize].split(' ').collect();
                let len = tokens.len() as f64;
                let mut counts: std::collections::BTreeMap<&str, f64> = Default::default();
                for t in &tokens {
                    *counts.entry(t).or_insert(0.0) += 1.0;
                }
                for (t, tf) in counts {
                    *m.entry(t).or_insert(0.0) += (e[i] / z) * tf / len;
                }
            }
            m.into_iter().collect()
        };
        p_r.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
        p_r.truncate(2);
        let mass: f64 = p_r.iter().map(|&(_, w)| w).sum();

        let mut expected: std::collections::BTreeMap<String, f64> = Default::default();
        expected.insert("a".to_string(), 0.5); // original: single-term query
        for (t, w) in p_r {
            *expected.entry(t.to_string()).or_insert(0.0) += 0.5 * w / mass;
        }

        let got = rm3_expand(&idx, &params, &bm25, query);
        assert_eq!(got.len(), expected.len());
        for (t, w) in &expected {
            let g = got.get(t).copied().unwrap_or(f64::NAN);
            assert!((g - w).abs() < 1e-9, "term {t}: {g} vs {w}");
        }
    }
}
