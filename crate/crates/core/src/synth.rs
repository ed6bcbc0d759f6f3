//! Deterministic synthetic fixtures.
//!
//! Documents form topical clusters. Every member of a cluster carries the
//! cluster's shared *hub* tokens; each document additionally owns a few
//! *unique* tokens and a handful of shared noise tokens. Pseudo-queries are
//! token subsets of their source document, so they mix unique and hub
//! vocabulary. Topics are built from a target document's unique tokens only,
//! and qrels mark the whole cluster relevant: plain lexical search over
//! documents can reach just the target, while the pseudo-query chain reaches
//! the siblings through the hub vocabulary.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dense::{hash_embed, EmbeddingMatrix};
use crate::error::Result;
use crate::lexical::Tokenizer;

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_docs: usize,
    /// Pseudo-queries generated per document (before deduplication).
    pub m: usize,
    /// Embedding dimension for the document vectors.
    pub dim: usize,
    pub cluster_size: usize,
    /// Hub tokens shared by every document of a cluster.
    pub hub_per_cluster: usize,
    /// Tokens exclusive to each document; topics are drawn from these.
    pub unique_per_doc: usize,
    pub noise_vocab: usize,
    pub noise_per_doc: usize,
    pub n_topics: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_docs: 200,
            m: 5,
            dim: 64,
            cluster_size: 5,
            hub_per_cluster: 4,
            unique_per_doc: 3,
            noise_vocab: 1500,
            noise_per_doc: 8,
            n_topics: 50,
        }
    }
}

/// Generated fixture, as file contents plus the document embeddings.
#[derive(Debug, Clone)]
pub struct SynthFixture {
    pub corpus_tsv: String,
    pub pseudo_queries_tsv: String,
    pub topics_tsv: String,
    pub qrels_txt: String,
    pub doc_embeddings: EmbeddingMatrix,
}

/// File names used by [`SynthFixture::write_to`].
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub corpus: PathBuf,
    pub pseudo_queries: PathBuf,
    pub topics: PathBuf,
    pub qrels: PathBuf,
    pub doc_embeddings: PathBuf,
}

impl SynthFixture {
    pub fn write_to(&self, dir: &Path) -> Result<SynthPaths> {
        let paths = SynthPaths {
            corpus: dir.join("corpus.tsv"),
            pseudo_queries: dir.join("pseudo_queries.tsv"),
            topics: dir.join("topics.tsv"),
            qrels: dir.join("qrels.txt"),
            doc_embeddings: dir.join("doc_embeddings.bin"),
        };
        let write = |path: &Path, contents: &str| -> Result<()> {
            std::fs::write(path, contents).map_err(|e| crate::error::Error::io(path, e))
        };
        write(&paths.corpus, &self.corpus_tsv)?;
        write(&paths.pseudo_queries, &self.pseudo_queries_tsv)?;
        write(&paths.topics, &self.topics_tsv)?;
        write(&paths.qrels, &self.qrels_txt)?;
        self.doc_embeddings.save(&paths.doc_embeddings)?;
        Ok(paths)
    }
}

fn random_word(rng: &mut ChaCha12Rng, seen: &mut HashSet<String>) -> String {
    loop {
        let len = rng.gen_range(5..=8);
        let word: String = (0..len).map(|_| (b'a' + rng.gen_range(0..26u8)) as char).collect();
        if crate::lexical::classic_stopwords().contains(&word) {
            continue;
        }
        if seen.insert(word.clone()) {
            return word;
        }
    }
}

pub fn synthesize(cfg: &SynthConfig) -> SynthFixture {
    assert!(cfg.n_docs >= 1 && cfg.m >= 1 && cfg.dim >= 1, "all sizes must be at least 1");
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut seen = HashSet::new();

    let cluster_size = cfg.cluster_size.max(1);
    let n_clusters = cfg.n_docs.div_ceil(cluster_size);
    let hubs: Vec<Vec<String>> = (0..n_clusters)
        .map(|_| (0..cfg.hub_per_cluster).map(|_| random_word(&mut rng, &mut seen)).collect())
        .collect();
    let noise: Vec<String> = (0..cfg.noise_vocab.max(1))
        .map(|_| random_word(&mut rng, &mut seen))
        .collect();

    let mut corpus_tsv = String::new();
    let mut pq_tsv = String::new();
    let mut doc_unique: Vec<Vec<String>> = Vec::with_capacity(cfg.n_docs);
    let mut embeddings: Vec<(u32, Vec<f32>)> = Vec::with_capacity(cfg.n_docs);
    let embed_tokenizer = Tokenizer::english();

    for doc in 0..cfg.n_docs {
        let cluster = doc / cluster_size;
        let unique: Vec<String> =
            (0..cfg.unique_per_doc).map(|_| random_word(&mut rng, &mut seen)).collect();
        let mut intent: Vec<String> = hubs[cluster].clone();
        intent.extend(unique.iter().cloned());

        let mut tokens: Vec<String> = Vec::new();
        for word in &intent {
            for _ in 0..rng.gen_range(1..=2) {
                tokens.push(word.clone());
            }
        }
        for _ in 0..cfg.noise_per_doc {
            // Quadratic skew: low indexes behave like frequent words.
            let idx = ((rng.gen::<f64>().powi(2)) * noise.len() as f64) as usize;
            tokens.push(noise[idx.min(noise.len() - 1)].clone());
        }
        tokens.shuffle(&mut rng);
        let text = tokens.join(" ");

        writeln!(corpus_tsv, "d{doc}\t{text}").unwrap();
        let (vector, _) = hash_embed(&text, cfg.dim, &embed_tokenizer);
        embeddings.push((doc as u32, vector));

        let distinct: Vec<String> = {
            let mut d = tokens.clone();
            d.sort();
            d.dedup();
            d
        };
        for _ in 0..cfg.m {
            let len = rng.gen_range(2..=4usize);
            let mut pq_tokens: Vec<String> = Vec::with_capacity(len);
            let mut used = HashSet::new();
            for _ in 0..len {
                let source: &[String] = if rng.gen::<f64>() < 0.8 { &intent } else { &distinct };
                if let Some(word) = source.choose(&mut rng) {
                    if used.insert(word.clone()) {
                        pq_tokens.push(word.clone());
                    }
                }
            }
            if pq_tokens.is_empty() {
                pq_tokens.push(intent[0].clone());
            }
            writeln!(pq_tsv, "d{doc}\t{}", pq_tokens.join(" ")).unwrap();
        }

        doc_unique.push(unique);
    }

    let mut topics_tsv = String::new();
    let mut qrels_txt = String::new();
    let n_topics = cfg.n_topics.min(cfg.n_docs).max(1);
    let stride = cfg.n_docs / n_topics;
    for topic in 0..n_topics {
        let target = (topic * stride.max(1)).min(cfg.n_docs - 1);
        let unique = &doc_unique[target];
        let len = rng.gen_range(2..=3usize).min(unique.len());
        let words: Vec<String> = unique.choose_multiple(&mut rng, len).cloned().collect();
        writeln!(topics_tsv, "q{topic}\t{}", words.join(" ")).unwrap();

        let cluster = target / cluster_size;
        let first = cluster * cluster_size;
        let last = (first + cluster_size).min(cfg.n_docs);
        for doc in first..last {
            writeln!(qrels_txt, "q{topic} 0 d{doc} 1").unwrap();
        }
    }

    let doc_embeddings =
        EmbeddingMatrix::from_rows(cfg.dim, embeddings).expect("hash embeddings are finite");

    SynthFixture {
        corpus_tsv,
        pseudo_queries_tsv: pq_tsv,
        topics_tsv,
        qrels_txt,
        doc_embeddings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_byte_identical() {
        let cfg = SynthConfig {
            n_docs: 30,
            ..SynthConfig::default()
        };
        let a = synthesize(&cfg);
        let b = synthesize(&cfg);
        assert_eq!(a.corpus_tsv, b.corpus_tsv);
        assert_eq!(a.pseudo_queries_tsv, b.pseudo_queries_tsv);
        assert_eq!(a.topics_tsv, b.topics_tsv);
        assert_eq!(a.qrels_txt, b.qrels_txt);
    }

    #[test]
    fn different_seeds_differ() {
        let a = synthesize(&SynthConfig { n_docs: 10, ..SynthConfig::default() });
        let b = synthesize(&SynthConfig { n_docs: 10, seed: 7, ..SynthConfig::default() });
        assert_ne!(a.corpus_tsv, b.corpus_tsv);
    }

    #[test]
    fn line_counts_match_budget() {
        let cfg = SynthConfig {
            n_docs: 10,
            m: 3,
            ..SynthConfig::default()
        };
        let fixture = synthesize(&cfg);
        assert_eq!(fixture.corpus_tsv.lines().count(), 10);
        assert_eq!(fixture.pseudo_queries_tsv.lines().count(), 30);
    }

    #[test]
    fn pseudo_queries_are_subsets_of_their_documents() {
        let cfg = SynthConfig {
            n_docs: 20,
            m: 4,
            ..SynthConfig::default()
        };
        let fixture = synthesize(&cfg);
        let docs: std::collections::HashMap<&str, HashSet<&str>> = fixture
            .corpus_tsv
            .lines()
            .map(|line| {
                let (id, text) = line.split_once('\t').unwrap();
                (id, text.split(' ').collect())
            })
            .collect();
        for line in fixture.pseudo_queries_tsv.lines() {
            let (id, text) = line.split_once('\t').unwrap();
            let tokens: Vec<&str> = text.split(' ').collect();
            assert!(!tokens.is_empty());
            for t in tokens {
                assert!(docs[id].contains(t), "pq token {t} not in {id}");
            }
        }
    }

    #[test]
    fn topics_use_tokens_unique_to_the_target() {
        // A topic's tokens must appear in exactly one document, the target
        // of its qrels cluster.
        let cfg = SynthConfig {
            n_docs: 25,
            n_topics: 5,
            ..SynthConfig::default()
        };
        let fixture = synthesize(&cfg);
        let docs: Vec<HashSet<&str>> = fixture
            .corpus_tsv
            .lines()
            .map(|line| line.split_once('\t').unwrap().1.split(' ').collect())
            .collect();
        for line in fixture.topics_tsv.lines() {
            let (_, text) = line.split_once('\t').unwrap();
            for token in text.split(' ') {
                let holders = docs.iter().filter(|d| d.contains(token)).count();
                assert_eq!(holders, 1, "token {token} appears in {holders} documents");
            }
        }
    }

    #[test]
    fn qrels_cover_each_topic_cluster() {
        let cfg = SynthConfig {
            n_docs: 25,
            n_topics: 5,
            ..SynthConfig::default()
        };
        let fixture = synthesize(&cfg);
        for topic in 0..5 {
            let marked = fixture
                .qrels_txt
                .lines()
                .filter(|l| l.starts_with(&format!("q{topic} ")))
                .count();
            assert_eq!(marked, cfg.cluster_size);
        }
    }
}
