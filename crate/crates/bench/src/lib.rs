//! Shared fixture construction for the retrieval benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use oprf_core::corpus::dedup_pseudo_queries;
use oprf_core::dense::PrfConfig;
use oprf_core::lexical::Tokenizer;
use oprf_core::offline::{
    prepare, DenseResources, ModelRegistry, ModelResources, ModelSpec, OfflineConfig, PqVectors,
};
use oprf_core::synth::{synthesize, SynthConfig};
use oprf_core::{Corpus, InvertedIndex, PseudoQuery, ResultStore};

pub struct BenchStack {
    pub corpus: Corpus,
    pub pseudo_queries: Vec<PseudoQuery>,
    pub doc_index: InvertedIndex,
    pub pq_index: InvertedIndex,
    pub store: ResultStore,
    pub doc_ids: Vec<String>,
    pub queries: Vec<String>,
}

/// Builds a mid-sized deterministic stack: synthetic corpus, both indexes, a
/// dense hash-embedding store with PRF, and a pool of benchmark queries.
pub fn build_stack(n_docs: usize, m: usize, k: usize) -> BenchStack {
    let fixture = synthesize(&SynthConfig {
        n_docs,
        m,
        n_topics: 10,
        ..SynthConfig::default()
    });
    let corpus = Corpus::from_records(fixture.corpus_tsv.lines().map(|line| {
        let (id, text) = line.split_once('\t').expect("synth corpus is TSV");
        (id.to_string(), text.to_string())
    }))
    .expect("synth corpus is valid");
    let pseudo_queries = dedup_pseudo_queries(fixture.pseudo_queries_tsv.lines().map(|line| {
        let (id, text) = line.split_once('\t').expect("synth pqs are TSV");
        (corpus.ordinal_of(id).expect("known doc"), text.to_string())
    }));

    let doc_index = InvertedIndex::build(
        corpus.iter().map(|d| (d.ordinal, d.text.as_str())),
        Tokenizer::english(),
    )
    .unwrap();
    let pq_index = InvertedIndex::build(
        pseudo_queries.iter().map(|pq| (pq.pq_id, pq.text.as_str())),
        Tokenizer::english(),
    )
    .unwrap();

    let registry = ModelRegistry::new(vec![ModelSpec {
        model_id: "hash".into(),
        resources: ModelResources::Dense(DenseResources {
            doc_embeddings: fixture.doc_embeddings.clone(),
            pq_vectors: PqVectors::Hashed(Tokenizer::english()),
        }),
        prf: PrfConfig::default(),
    }])
    .unwrap();
    let store = prepare(
        &pseudo_queries,
        &registry,
        &OfflineConfig { k, m: m as u32 },
        2,
    )
    .unwrap();

    let vocab: Vec<&str> = pseudo_queries.iter().flat_map(|pq| pq.text.split(' ')).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(0xbe);
    let queries = (0..64)
        .map(|_| {
            format!(
                "{} {} {}",
                vocab[rng.gen_range(0..vocab.len())],
                vocab[rng.gen_range(0..vocab.len())],
                vocab[rng.gen_range(0..vocab.len())]
            )
        })
        .collect();

    let doc_ids = corpus.ext_id_table();
    BenchStack {
        corpus,
        pseudo_queries,
        doc_index,
        pq_index,
        store,
        doc_ids,
        queries,
    }
}
