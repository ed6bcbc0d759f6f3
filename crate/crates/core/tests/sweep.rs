//! Sweep-harness behavior: no-op points reproduce the baseline evaluation,
//! and the s axis costs latency monotonically.

use std::sync::{Mutex, MutexGuard, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use oprf_core::corpus::{load_corpus, load_pseudo_queries, load_qrels, load_topics};
use oprf_core::dense::PrfConfig;
use oprf_core::eval::{run_sweep, MetricConfig, SweepAssets, SweepParam, SweepSpec};
use oprf_core::lexical::Tokenizer;
use oprf_core::offline::{
    prepare, DenseResources, ModelRegistry, ModelResources, ModelSpec, OfflineConfig, PqVectors,
};
use oprf_core::synth::{synthesize, SynthConfig};
use oprf_core::{
    CorpusFormat, InvertedIndex, OnlineConfig, PseudoQuery, Qrels, ResultStore, Topic,
};

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

struct Stack {
    pqs: Vec<PseudoQuery>,
    pq_pairs: Vec<(u32, String)>,
    topics: Vec<Topic>,
    qrels: Qrels,
    store: ResultStore,
    pq_index: InvertedIndex,
    doc_ids: Vec<String>,
}

fn build_stack(n_docs: usize, m: usize, k: usize) -> Stack {
    let cfg = SynthConfig {
        n_docs,
        m,
        n_topics: 20,
        ..SynthConfig::default()
    };
    let fixture = synthesize(&cfg);
    let dir = tempfile::tempdir().unwrap();
    let paths = fixture.write_to(dir.path()).unwrap();
    let corpus = load_corpus(&paths.corpus, CorpusFormat::Tsv).unwrap();
    let pqs = load_pseudo_queries(&paths.pseudo_queries, &corpus).unwrap();
    let pq_pairs = oprf_core::corpus::read_pseudo_query_lines(&paths.pseudo_queries, &corpus).unwrap();
    let topics = load_topics(&paths.topics).unwrap();
    let qrels = load_qrels(&paths.qrels).unwrap();

    let registry = ModelRegistry::new(vec![ModelSpec {
        model_id: "hash".into(),
        resources: ModelResources::Dense(DenseResources {
            doc_embeddings: fixture.doc_embeddings.clone(),
            pq_vectors: PqVectors::Hashed(Tokenizer::english()),
        }),
        prf: PrfConfig::default(),
    }])
    .unwrap();
    let store = prepare(&pqs, &registry, &OfflineConfig { k, m: m as u32 }, 2).unwrap();
    let pq_index = InvertedIndex::build(
        pqs.iter().map(|pq| (pq.pq_id, pq.text.as_str())),
        Tokenizer::english(),
    )
    .unwrap();
    let doc_ids = corpus.ext_id_table();
    Stack {
        pqs,
        pq_pairs,
        topics,
        qrels,
        store,
        pq_index,
        doc_ids,
    }
}

fn assets<'a>(stack: &'a Stack, topics: &'a [Topic]) -> SweepAssets<'a> {
    SweepAssets {
        store: &stack.store,
        pq_index: &stack.pq_index,
        doc_ids: &stack.doc_ids,
        doc_index: None,
        topics,
        qrels: &stack.qrels,
        config: OnlineConfig::default(),
        metrics: MetricConfig::default(),
        pq_pairs: Some(&stack.pq_pairs),
        tag: "sweep-test".into(),
    }
}

#[test]
fn truncation_at_stored_k_is_a_no_op() {
    let _guard = serial();
    let stack = build_stack(120, 4, 60);
    let spec = SweepSpec::new(SweepParam::KTruncation, vec![30, 60]).unwrap();
    let points = run_sweep(&spec, &assets(&stack, &stack.topics)).unwrap();
    let baseline = run_sweep(
        &SweepSpec::new(SweepParam::S, vec![4]).unwrap(),
        &assets(&stack, &stack.topics),
    )
    .unwrap();
    let full = &points[1];
    assert_eq!(full.value, 60);
    assert_eq!(full.ndcg, baseline[0].ndcg);
    assert_eq!(full.map, baseline[0].map);
    assert_eq!(full.recall, baseline[0].recall);
}

#[test]
fn full_m_subset_is_a_no_op() {
    let _guard = serial();
    let stack = build_stack(120, 4, 60);
    let spec = SweepSpec::new(SweepParam::MSubset, vec![2, 4]).unwrap();
    let points = run_sweep(&spec, &assets(&stack, &stack.topics)).unwrap();
    let baseline = run_sweep(
        &SweepSpec::new(SweepParam::S, vec![4]).unwrap(),
        &assets(&stack, &stack.topics),
    )
    .unwrap();
    let full = &points[1];
    assert_eq!(full.value, 4);
    assert_eq!(full.ndcg, baseline[0].ndcg);
    assert_eq!(full.map, baseline[0].map);
    assert_eq!(full.recall, baseline[0].recall);
}

#[test]
fn single_value_sweep_equals_direct_evaluation() {
    let _guard = serial();
    let stack = build_stack(100, 3, 50);
    let one = run_sweep(
        &SweepSpec::new(SweepParam::S, vec![2]).unwrap(),
        &assets(&stack, &stack.topics),
    )
    .unwrap();
    let cfg = OnlineConfig {
        s: 2,
        ..OnlineConfig::default()
    };
    let direct = run_sweep(
        &SweepSpec::new(SweepParam::S, vec![2]).unwrap(),
        &SweepAssets {
            config: cfg,
            ..assets(&stack, &stack.topics)
        },
    )
    .unwrap();
    assert_eq!(one[0].ndcg, direct[0].ndcg);
    assert_eq!(one[0].map, direct[0].map);
}

#[test]
fn sweep_value_exceeding_data_names_the_value() {
    let _guard = serial();
    let stack = build_stack(60, 3, 30);
    let err = run_sweep(
        &SweepSpec::new(SweepParam::KTruncation, vec![31]).unwrap(),
        &assets(&stack, &stack.topics),
    )
    .unwrap_err();
    assert!(err.to_string().contains("31"), "{err}");
    let err = run_sweep(
        &SweepSpec::new(SweepParam::MSubset, vec![4]).unwrap(),
        &assets(&stack, &stack.topics),
    )
    .unwrap_err();
    assert!(err.to_string().contains('4'), "{err}");
}

#[test]
fn spec_validation() {
    assert!(SweepSpec::new(SweepParam::S, vec![]).is_err());
    assert!(SweepSpec::new(SweepParam::S, vec![2, 2]).is_err());
    assert!(SweepSpec::new(SweepParam::S, vec![4, 2]).is_err());
    assert!(SweepSpec::new(SweepParam::S, vec![1, 2, 4]).is_ok());
}

#[test]
fn latency_column_trends_upward_in_s() {
    let _guard = serial();
    let stack = build_stack(2000, 4, 400);
    // Queries drawn from the pseudo-query vocabulary keep the match pool
    // deep for every s value.
    let vocab: Vec<&str> = stack.pqs.iter().flat_map(|pq| pq.text.split(' ')).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    let timing_topics: Vec<Topic> = (0..50)
        .map(|i| Topic {
            qid: format!("t{i}"),
            text: format!(
                "{} {} {}",
                vocab[rng.gen_range(0..vocab.len())],
                vocab[rng.gen_range(0..vocab.len())],
                vocab[rng.gen_range(0..vocab.len())]
            ),
        })
        .collect();
    let spec = SweepSpec::new(SweepParam::S, vec![1, 2, 4, 8]).unwrap();

    // Median of repeated sweeps per s value.
    let mut per_s: Vec<Vec<f64>> = vec![Vec::new(); 4];
    for _rep in 0..5 {
        let points = run_sweep(&spec, &assets(&stack, &timing_topics)).unwrap();
        for (i, p) in points.iter().enumerate() {
            per_s[i].push(p.mean_latency_us);
        }
    }
    let medians: Vec<f64> = per_s
        .iter()
        .map(|reps| {
            let mut sorted = reps.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sorted[sorted.len() / 2]
        })
        .collect();
    for pair in medians.windows(2) {
        assert!(pair[1] >= pair[0], "latency by s not monotone: {medians:?}");
    }
}
