//! Single-pass retrieval over precomputed pseudo-query results.
//!
//! Relevance work is split across two stages. Offline, every document-derived
//! pseudo-query is run through the registered retrieval models — dense
//! inner-product search with optional vector PRF, or BM25 over a (possibly
//! expanded) document index — and its top-k lists are persisted in a
//! [`offline::ResultStore`]. Online, a live query is matched to its top-s
//! pseudo-queries with BM25 only; their stored lists are gathered, min-max
//! normalized per (pseudo-query, model) column, and fused by a
//! softmax-weighted sum, optionally together with an on-the-fly sparse run
//! for the original query. The expensive model inference never runs at query
//! time, and the serving path never loads an embedding.

pub mod corpus;
pub mod dense;
pub mod error;
pub mod eval;
pub mod hash;
pub mod lexical;
pub mod offline;
pub mod online;
pub mod synth;

pub use corpus::{Corpus, CorpusFormat, Document, PseudoQuery, Qrels, RunFile, Topic};
pub use dense::{dense_topk, hash_embed, prf_avg, EmbeddingMatrix, PrfConfig, PrfMode};
pub use error::{Error, Result};
pub use eval::MetricConfig;
pub use lexical::{Bm25Params, InvertedIndex, Rm3Params, Tokenizer};
pub use offline::{
    estimate_storage, prepare, ModelKind, ModelRegistry, ModelSpec, OfflineConfig, ResultStore,
};
pub use online::{OnlineConfig, SearchEngine, SearchOutput, SearchTiming, SparseConfig};
pub use synth::{synthesize, SynthConfig, SynthFixture};
