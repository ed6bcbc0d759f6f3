//! Offline preparation: per-pseudo-query top-k result lists.
//!
//! For every unique pseudo-query and every registered model, the preparer
//! computes a (optionally PRF-refined) top-k document list with raw scores
//! and persists the lot as a single immutable store file. The store is the
//! only retrieval artifact the online stage reads: queries never touch
//! embeddings at serving time.
//!
//! Store file layout (`OPRFSTO1`, little-endian): manifest (k, m, build
//! hash, model descriptors), pseudo-query text block, then one
//! length-prefixed `(u32 ordinal, f32 score)` array per (pseudo-query,
//! model) pair, pseudo-query-major.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::corpus::PseudoQuery;
use crate::dense::{dense_topk, hash_embed, prf_avg, EmbeddingMatrix, PrfConfig, PrfMode};
use crate::error::{Error, Result};
use crate::hash::Fnv1a;
use crate::lexical::{bm25_search, Bm25Params, InvertedIndex, Tokenizer};

const MAGIC: &[u8; 8] = b"OPRFSTO1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Dense,
    Lexical,
}

/// Where a dense model's pseudo-query vectors come from: a pre-computed
/// embedding file keyed by pq_id, or the deterministic hash embedder applied
/// to the pseudo-query text.
pub enum PqVectors {
    Matrix(EmbeddingMatrix),
    Hashed(Tokenizer),
}

pub struct DenseResources {
    pub doc_embeddings: EmbeddingMatrix,
    pub pq_vectors: PqVectors,
}

pub struct LexicalResources {
    pub index: InvertedIndex,
    pub bm25: Bm25Params,
}

pub enum ModelResources {
    Dense(DenseResources),
    Lexical(LexicalResources),
}

pub struct ModelSpec {
    pub model_id: String,
    pub resources: ModelResources,
    pub prf: PrfConfig,
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self.resources {
            ModelResources::Dense(_) => ModelKind::Dense,
            ModelResources::Lexical(_) => ModelKind::Lexical,
        }
    }
}

/// Ordered set of score models feeding the store.
pub struct ModelRegistry {
    models: Vec<ModelSpec>,
}

impl ModelRegistry {
    pub fn new(models: Vec<ModelSpec>) -> Result<ModelRegistry> {
        if models.is_empty() {
            return Err(Error::invalid("model registry requires at least one model"));
        }
        let mut seen = HashSet::new();
        for spec in &models {
            if !seen.insert(spec.model_id.clone()) {
                return Err(Error::invalid(format!(
                    "duplicate model id {:?}",
                    spec.model_id
                )));
            }
            if spec.kind() == ModelKind::Lexical && spec.prf.mode == PrfMode::Avg {
                return Err(Error::invalid(format!(
                    "model {:?}: vector PRF is only defined for dense models",
                    spec.model_id
                )));
            }
        }
        Ok(ModelRegistry { models })
    }

    pub fn models(&self) -> &[ModelSpec] {
        &self.models
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OfflineConfig {
    /// Documents stored per (pseudo-query, model).
    pub k: usize,
    /// Generation budget per document, recorded for provenance.
    pub m: u32,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        OfflineConfig { k: 1000, m: 80 }
    }
}

/// Manifest entry describing how one model's lists were produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMeta {
    pub model_id: String,
    pub kind: ModelKind,
    pub prf_mode: PrfMode,
    pub prf_depth: u32,
}

/// The offline artifact: top-k lists per (pseudo-query, model), plus the
/// pseudo-query texts and build parameters needed to reproduce them.
#[derive(Debug, Clone)]
pub struct ResultStore {
    pub k: u32,
    pub m: u32,
    pub build_hash: u64,
    models: Vec<ModelMeta>,
    pq_texts: Vec<String>,
    lists: Vec<Vec<(u32, f32)>>,
}

impl ResultStore {
    pub fn n_pseudo_queries(&self) -> usize {
        self.pq_texts.len()
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[ModelMeta] {
        &self.models
    }

    pub fn pq_text(&self, pq_id: u32) -> Option<&str> {
        self.pq_texts.get(pq_id as usize).map(|s| s.as_str())
    }

    pub fn pq_texts(&self) -> &[String] {
        &self.pq_texts
    }

    pub fn contains_pq(&self, pq_id: u32) -> bool {
        (pq_id as usize) < self.pq_texts.len()
    }

    /// Stored list for one (pseudo-query, model) pair.
    pub fn list(&self, pq_id: u32, model_idx: usize) -> Option<&[(u32, f32)]> {
        if !self.contains_pq(pq_id) || model_idx >= self.models.len() {
            return None;
        }
        Some(&self.lists[pq_id as usize * self.models.len() + model_idx])
    }

    /// A store restricted to the given pseudo-queries, re-identified densely
    /// in the order supplied. Lists are copied as stored.
    pub fn subset(&self, pq_ids: &[u32]) -> Result<ResultStore> {
        let n_models = self.models.len();
        let mut pq_texts = Vec::with_capacity(pq_ids.len());
        let mut lists = Vec::with_capacity(pq_ids.len() * n_models);
        for &pq_id in pq_ids {
            if !self.contains_pq(pq_id) {
                return Err(Error::UnknownPqId(pq_id));
            }
            pq_texts.push(self.pq_texts[pq_id as usize].clone());
            for model_idx in 0..n_models {
                lists.push(self.lists[pq_id as usize * n_models + model_idx].clone());
            }
        }
        Ok(ResultStore {
            k: self.k,
            m: self.m,
            build_hash: self.build_hash,
            models: self.models.clone(),
            pq_texts,
            lists,
        })
    }

    /// A copy whose lists are truncated to the first `k` entries; used by the
    /// retrieval-depth sweep to explore smaller k without re-preparing.
    pub fn truncated(&self, k: usize) -> Result<ResultStore> {
        if k > self.k as usize {
            return Err(Error::invalid(format!(
                "truncation depth {k} exceeds stored k {}",
                self.k
            )));
        }
        let mut out = self.clone();
        out.k = k as u32;
        for list in out.lists.iter_mut() {
            list.truncate(k);
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(self.k)?;
        w.write_u32::<LittleEndian>(self.m)?;
        w.write_u64::<LittleEndian>(self.build_hash)?;
        w.write_u32::<LittleEndian>(self.models.len() as u32)?;
        for m in &self.models {
            w.write_u32::<LittleEndian>(m.model_id.len() as u32)?;
            w.write_all(m.model_id.as_bytes())?;
            w.write_u8(match m.kind {
                ModelKind::Dense => 0,
                ModelKind::Lexical => 1,
            })?;
            w.write_u8(match m.prf_mode {
                PrfMode::None => 0,
                PrfMode::Avg => 1,
            })?;
            w.write_u32::<LittleEndian>(m.prf_depth)?;
        }
        w.write_u64::<LittleEndian>(self.pq_texts.len() as u64)?;
        for text in &self.pq_texts {
            w.write_u32::<LittleEndian>(text.len() as u32)?;
            w.write_all(text.as_bytes())?;
        }
        for list in &self.lists {
            w.write_u32::<LittleEndian>(list.len() as u32)?;
            for &(ordinal, score) in list {
                w.write_u32::<LittleEndian>(ordinal)?;
                w.write_f32::<LittleEndian>(score)?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ResultStore> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        Self::read_from(&mut r).map_err(|e| match e {
            StoreReadError::Io(io) => Error::format(path, format!("truncated store: {io}")),
            StoreReadError::Bad(msg) => Error::format(path, msg),
        })
    }

    fn read_from<R: Read>(r: &mut R) -> std::result::Result<ResultStore, StoreReadError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(StoreReadError::Bad("bad magic, not a result store".into()));
        }
        let k = r.read_u32::<LittleEndian>()?;
        let m = r.read_u32::<LittleEndian>()?;
        let build_hash = r.read_u64::<LittleEndian>()?;
        let n_models = r.read_u32::<LittleEndian>()? as usize;
        let mut models = Vec::with_capacity(n_models);
        for _ in 0..n_models {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            let model_id = String::from_utf8(buf)
                .map_err(|_| StoreReadError::Bad("invalid UTF-8 model id".into()))?;
            let kind = match r.read_u8()? {
                0 => ModelKind::Dense,
                1 => ModelKind::Lexical,
                other => return Err(StoreReadError::Bad(format!("unknown model kind {other}"))),
            };
            let prf_mode = match r.read_u8()? {
                0 => PrfMode::None,
                1 => PrfMode::Avg,
                other => return Err(StoreReadError::Bad(format!("unknown prf mode {other}"))),
            };
            let prf_depth = r.read_u32::<LittleEndian>()?;
            models.push(ModelMeta {
                model_id,
                kind,
                prf_mode,
                prf_depth,
            });
        }
        let n_pqs = r.read_u64::<LittleEndian>()? as usize;
        let mut pq_texts = Vec::with_capacity(n_pqs);
        for _ in 0..n_pqs {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            pq_texts.push(
                String::from_utf8(buf)
                    .map_err(|_| StoreReadError::Bad("invalid UTF-8 pseudo-query".into()))?,
            );
        }
        let mut lists = Vec::with_capacity(n_pqs * n_models.max(1));
        for _ in 0..n_pqs * n_models {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut list = Vec::with_capacity(len);
            for _ in 0..len {
                let ordinal = r.read_u32::<LittleEndian>()?;
                let score = r.read_f32::<LittleEndian>()?;
                list.push((ordinal, score));
            }
            lists.push(list);
        }
        Ok(ResultStore {
            k,
            m,
            build_hash,
            models,
            pq_texts,
            lists,
        })
    }
}

enum StoreReadError {
    Io(std::io::Error),
    Bad(String),
}

impl From<std::io::Error> for StoreReadError {
    fn from(e: std::io::Error) -> Self {
        StoreReadError::Io(e)
    }
}

/// Compute every (pseudo-query, model) top-k list. `workers` contiguous
/// pseudo-query shards run in parallel; the merged output is identical for
/// any worker count.
pub fn prepare(
    pseudo_queries: &[PseudoQuery],
    registry: &ModelRegistry,
    cfg: &OfflineConfig,
    workers: usize,
) -> Result<ResultStore> {
    type ShardLists = Vec<Vec<(u32, f32)>>;
    let workers = workers.max(1);
    let n_models = registry.models().len();
    let mut lists: ShardLists = Vec::with_capacity(pseudo_queries.len() * n_models);

    if workers == 1 || pseudo_queries.len() < 2 {
        for pq in pseudo_queries {
            let mut per_pq = prepare_one(pq, registry, cfg)?;
            lists.append(&mut per_pq);
        }
    } else {
        let chunk = pseudo_queries.len().div_ceil(workers);
        let shards: Vec<Result<ShardLists>> = std::thread::scope(|scope| {
            let handles: Vec<_> = pseudo_queries
                .chunks(chunk)
                .map(|shard| {
                    scope.spawn(move || {
                        let mut out = Vec::with_capacity(shard.len() * n_models);
                        for pq in shard {
                            out.append(&mut prepare_one(pq, registry, cfg)?);
                        }
                        Ok(out)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for shard in shards {
            lists.append(&mut shard?);
        }
    }

    let models: Vec<ModelMeta> = registry
        .models()
        .iter()
        .map(|spec| ModelMeta {
            model_id: spec.model_id.clone(),
            kind: spec.kind(),
            prf_mode: spec.prf.mode,
            prf_depth: spec.prf.depth as u32,
        })
        .collect();

    let build_hash = build_fingerprint(pseudo_queries, &models, cfg);

    Ok(ResultStore {
        k: cfg.k as u32,
        m: cfg.m,
        build_hash,
        models,
        pq_texts: pseudo_queries.iter().map(|pq| pq.text.clone()).collect(),
        lists,
    })
}

fn prepare_one(
    pq: &PseudoQuery,
    registry: &ModelRegistry,
    cfg: &OfflineConfig,
) -> Result<Vec<Vec<(u32, f32)>>> {
    let mut per_model = Vec::with_capacity(registry.models().len());
    for spec in registry.models() {
        let list = match &spec.resources {
            ModelResources::Dense(res) => {
                let query = match &res.pq_vectors {
                    PqVectors::Matrix(m) => m
                        .row(pq.pq_id)
                        .ok_or_else(|| Error::MissingPqEmbedding {
                            model_id: spec.model_id.clone(),
                            pq_id: pq.pq_id,
                        })?
                        .to_vec(),
                    PqVectors::Hashed(tokenizer) => {
                        hash_embed(&pq.text, res.doc_embeddings.dim(), tokenizer).0
                    }
                };
                let query = if spec.prf.mode == PrfMode::Avg {
                    prf_avg(&res.doc_embeddings, &query, &spec.prf)?
                } else {
                    query
                };
                dense_topk(&res.doc_embeddings, &query, cfg.k)?
            }
            ModelResources::Lexical(res) => bm25_search(&res.index, &res.bm25, &pq.text, cfg.k)
                .into_iter()
                .map(|(ordinal, score)| (ordinal, score as f32))
                .collect(),
        };
        per_model.push(list);
    }
    Ok(per_model)
}

fn build_fingerprint(pqs: &[PseudoQuery], models: &[ModelMeta], cfg: &OfflineConfig) -> u64 {
    let mut h = Fnv1a::new();
    h.update_u64(cfg.k as u64).update_u64(cfg.m as u64);
    h.update_u64(models.len() as u64);
    for m in models {
        h.update_str(&m.model_id);
        h.update_u64(match m.kind {
            ModelKind::Dense => 0,
            ModelKind::Lexical => 1,
        });
        h.update_u64(match m.prf_mode {
            PrfMode::None => 0,
            PrfMode::Avg => u64::from(m.prf_depth) << 1 | 1,
        });
    }
    h.update_u64(pqs.len() as u64);
    for pq in pqs {
        h.update_str(&pq.text);
    }
    h.finish()
}

/// Per-document storage footprint in bytes:
/// `pq_per_doc × (avg_pq_chars + k × (score_bytes + id_bytes))`.
pub fn estimate_storage(
    pq_per_doc: f64,
    avg_pq_chars: f64,
    k: u64,
    score_bytes: u64,
    id_bytes: u64,
) -> f64 {
    pq_per_doc * (avg_pq_chars + k as f64 * (score_bytes + id_bytes) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn pq(pq_id: u32, text: &str) -> PseudoQuery {
        PseudoQuery {
            pq_id,
            text: text.to_string(),
            source_docs: BTreeSet::from([0]),
        }
    }

    fn dense_registry(prf: PrfConfig) -> ModelRegistry {
        let docs = EmbeddingMatrix::from_rows(
            4,
            vec![
                (0u32, vec![1.0, 0.0, 0.0, 0.0]),
                (1u32, vec![0.0, 1.0, 0.0, 0.0]),
                (2u32, vec![0.7, 0.7, 0.0, 0.0]),
            ],
        )
        .unwrap();
        ModelRegistry::new(vec![ModelSpec {
            model_id: "dense0".into(),
            resources: ModelResources::Dense(DenseResources {
                doc_embeddings: docs,
                pq_vectors: PqVectors::Hashed(Tokenizer::plain()),
            }),
            prf,
        }])
        .unwrap()
    }

    #[test]
    fn passthrough_equals_dense_topk() {
        let registry = dense_registry(PrfConfig { mode: PrfMode::None, depth: 0 });
        let pqs = vec![pq(0, "anything at all")];
        let cfg = OfflineConfig { k: 10, m: 1 };
        let store = prepare(&pqs, &registry, &cfg, 1).unwrap();
        let ModelResources::Dense(res) = &registry.models()[0].resources else {
            unreachable!()
        };
        let (qvec, _) = hash_embed("anything at all", 4, &Tokenizer::plain());
        let expected = dense_topk(&res.doc_embeddings, &qvec, 10).unwrap();
        assert_eq!(store.list(0, 0).unwrap(), expected.as_slice());
    }

    #[test]
    fn two_models_two_lists_per_pq() {
        let docs = EmbeddingMatrix::from_rows(4, vec![(0u32, vec![1.0, 0.0, 0.0, 0.0])]).unwrap();
        let index = InvertedIndex::build([(0u32, "apple pie")], Tokenizer::plain()).unwrap();
        let registry = ModelRegistry::new(vec![
            ModelSpec {
                model_id: "d".into(),
                resources: ModelResources::Dense(DenseResources {
                    doc_embeddings: docs,
                    pq_vectors: PqVectors::Hashed(Tokenizer::plain()),
                }),
                prf: PrfConfig { mode: PrfMode::None, depth: 0 },
            },
            ModelSpec {
                model_id: "l".into(),
                resources: ModelResources::Lexical(LexicalResources {
                    index,
                    bm25: Bm25Params::default(),
                }),
                prf: PrfConfig { mode: PrfMode::None, depth: 0 },
            },
        ])
        .unwrap();
        let pqs = vec![pq(0, "apple"), pq(1, "pie")];
        let store = prepare(&pqs, &registry, &OfflineConfig { k: 5, m: 1 }, 1).unwrap();
        assert_eq!(store.n_models(), 2);
        for id in 0..2u32 {
            assert!(store.list(id, 0).is_some());
            assert!(store.list(id, 1).is_some());
        }
        // Without PRF the lexical lists are exactly bm25_search output.
        let ModelResources::Lexical(res) = &registry.models()[1].resources else {
            unreachable!()
        };
        for (id, text) in [(0u32, "apple"), (1, "pie")] {
            let expected: Vec<(u32, f32)> = bm25_search(&res.index, &res.bm25, text, 5)
                .into_iter()
                .map(|(o, s)| (o, s as f32))
                .collect();
            assert_eq!(store.list(id, 1).unwrap(), expected.as_slice());
        }
    }

    #[test]
    fn missing_pq_embedding_names_ids() {
        let docs = EmbeddingMatrix::from_rows(2, vec![(0u32, vec![1.0, 0.0])]).unwrap();
        let pq_matrix = EmbeddingMatrix::from_rows(2, vec![(0u32, vec![1.0, 0.0])]).unwrap();
        let registry = ModelRegistry::new(vec![ModelSpec {
            model_id: "tct".into(),
            resources: ModelResources::Dense(DenseResources {
                doc_embeddings: docs,
                pq_vectors: PqVectors::Matrix(pq_matrix),
            }),
            prf: PrfConfig { mode: PrfMode::None, depth: 0 },
        }])
        .unwrap();
        let pqs = vec![pq(0, "ok"), pq(1, "missing")];
        match prepare(&pqs, &registry, &OfflineConfig { k: 5, m: 1 }, 1) {
            Err(Error::MissingPqEmbedding { model_id, pq_id }) => {
                assert_eq!(model_id, "tct");
                assert_eq!(pq_id, 1);
            }
            other => panic!("expected missing-embedding error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn lexical_model_rejects_vector_prf() {
        let index = InvertedIndex::build([(0u32, "a")], Tokenizer::plain()).unwrap();
        let spec = ModelSpec {
            model_id: "lex".into(),
            resources: ModelResources::Lexical(LexicalResources {
                index,
                bm25: Bm25Params::default(),
            }),
            prf: PrfConfig::default(),
        };
        assert!(ModelRegistry::new(vec![spec]).is_err());
    }

    #[test]
    fn empty_store_round_trips() {
        let registry = dense_registry(PrfConfig { mode: PrfMode::None, depth: 0 });
        let store = prepare(&[], &registry, &OfflineConfig::default(), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.sto");
        store.save(&path).unwrap();
        let back = ResultStore::load(&path).unwrap();
        assert_eq!(back.n_pseudo_queries(), 0);
        assert_eq!(back.n_models(), 1);
    }

    #[test]
    fn round_trip_bitwise_identical() {
        let registry = dense_registry(PrfConfig::default());
        let pqs: Vec<PseudoQuery> = (0..20)
            .map(|i| pq(i, &format!("query number {i}")))
            .collect();
        let store = prepare(&pqs, &registry, &OfflineConfig { k: 3, m: 2 }, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.sto");
        store.save(&path).unwrap();
        let back = ResultStore::load(&path).unwrap();
        assert_eq!(back.models(), store.models());
        assert_eq!(back.pq_texts(), store.pq_texts());
        for pq_id in 0..20u32 {
            let a = store.list(pq_id, 0).unwrap();
            let b = back.list(pq_id, 0).unwrap();
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.0, y.0);
                assert_eq!(x.1.to_bits(), y.1.to_bits());
            }
        }
        // Second save is byte-identical.
        let path2 = dir.path().join("s2.sto");
        back.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn truncated_file_fails_to_load() {
        let registry = dense_registry(PrfConfig::default());
        let pqs = vec![pq(0, "alpha"), pq(1, "beta")];
        let store = prepare(&pqs, &registry, &OfflineConfig { k: 3, m: 1 }, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.sto");
        store.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        assert!(ResultStore::load(&path).is_err());
    }

    #[test]
    fn partition_invariant_across_worker_counts() {
        let registry = dense_registry(PrfConfig::default());
        let pqs: Vec<PseudoQuery> = (0..37)
            .map(|i| pq(i, &format!("shard test {i} tokens")))
            .collect();
        let cfg = OfflineConfig { k: 3, m: 2 };
        let one = prepare(&pqs, &registry, &cfg, 1).unwrap();
        for workers in [2, 4, 7] {
            let many = prepare(&pqs, &registry, &cfg, workers).unwrap();
            assert_eq!(one.lists, many.lists, "workers = {workers}");
            assert_eq!(one.build_hash, many.build_hash);
        }
    }

    #[test]
    fn storage_arithmetic() {
        assert_eq!(estimate_storage(45.0, 34.0, 1000, 4, 4), 361530.0);
        let small = estimate_storage(3.9, 34.0, 500, 4, 4);
        assert!((small - 15732.6).abs() < 1e-9);
        assert_eq!(small.round() as u64, 15733);
        assert_eq!(estimate_storage(0.0, 34.0, 1000, 4, 4), 0.0);
    }

    #[test]
    fn storage_estimate_scales_linearly() {
        let base = estimate_storage(10.0, 30.0, 100, 4, 4);
        assert_eq!(estimate_storage(20.0, 30.0, 100, 4, 4), 2.0 * base);
        let inner = estimate_storage(10.0, 30.0, 200, 4, 4) - base;
        assert_eq!(inner, 10.0 * 100.0 * 8.0);
    }

    #[test]
    fn store_truncation_caps_lists() {
        let registry = dense_registry(PrfConfig { mode: PrfMode::None, depth: 0 });
        let pqs = vec![pq(0, "alpha beta")];
        let store = prepare(&pqs, &registry, &OfflineConfig { k: 3, m: 1 }, 1).unwrap();
        let cut = store.truncated(1).unwrap();
        assert_eq!(cut.list(0, 0).unwrap().len(), 1);
        assert_eq!(cut.list(0, 0).unwrap()[0], store.list(0, 0).unwrap()[0]);
        assert!(store.truncated(10).is_err());
    }
}
