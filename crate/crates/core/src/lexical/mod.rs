//! Tokenization, inverted indexing, BM25, and RM3 expansion.
//!
//! Serves two roles: matching live queries against the pseudo-query
//! collection, and acting as the sparse retriever for original-query fusion
//! and for lexical models in the offline registry.

pub mod index;
pub mod rm3;
pub mod search;
pub mod tokenizer;

pub use index::InvertedIndex;
pub use rm3::{query_distribution, rm3_expand, Rm3Params};
pub use search::{bm25_score, bm25_search, idf, weighted_search, Bm25Params, WeightedQuery};
pub use tokenizer::{classic_stopwords, StemmerKind, Tokenizer};
