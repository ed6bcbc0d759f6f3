//! End-to-end tests of the `oprf` binary: exit codes, determinism, and the
//! pipeline's content-hash staleness logic.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oprf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oprf"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed: exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Builds the standard fixture and index/store artifacts under `dir`.
fn build_fixture(dir: &Path) -> PathBuf {
    let fx = dir.join("fx");
    let out = oprf(
        &[
            "synth",
            "--out-dir",
            fx.to_str().unwrap(),
            "--n-docs",
            "80",
            "--m",
            "3",
            "--dim",
            "32",
            "--n-topics",
            "16",
        ],
        dir,
    );
    assert_success(&out, "synth");
    fx
}

#[test]
fn missing_input_path_exits_with_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = oprf(
        &[
            "index",
            "--corpus",
            "no/such/corpus.tsv",
            "--pseudo-queries",
            "x.tsv",
            "--pq-index",
            "out.idx",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no/such/corpus.tsv"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = oprf(&["eval", "--does-not-exist"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_storage_reports_paper_scale_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = oprf(
        &[
            "estimate-storage",
            "--pq-per-doc",
            "45",
            "--avg-pq-chars",
            "34",
            "--k",
            "1000",
        ],
        dir.path(),
    );
    assert_success(&out, "estimate-storage");
    assert!(stdout(&out).contains("361530"), "stdout: {}", stdout(&out));

    let out = oprf(
        &[
            "estimate-storage",
            "--pq-per-doc",
            "3.9",
            "--avg-pq-chars",
            "34",
            "--k",
            "500",
        ],
        dir.path(),
    );
    assert_success(&out, "estimate-storage small");
    assert!(stdout(&out).contains("15733"), "stdout: {}", stdout(&out));
}

#[test]
fn artifacts_are_deterministic_across_reruns_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let fx = build_fixture(dir.path());
    let fxs = fx.to_str().unwrap();

    // Rebuilding the indexes yields byte-identical files.
    for round in 0..2 {
        let out = oprf(
            &[
                "index",
                "--corpus",
                &format!("{fxs}/corpus.tsv"),
                "--pseudo-queries",
                &format!("{fxs}/pseudo_queries.tsv"),
                "--pq-index",
                &format!("{fxs}/pq{round}.idx"),
                "--doc-index",
                &format!("{fxs}/docs{round}.idx"),
                "--expand",
            ],
            dir.path(),
        );
        assert_success(&out, "index");
    }
    assert_eq!(
        std::fs::read(fx.join("pq0.idx")).unwrap(),
        std::fs::read(fx.join("pq1.idx")).unwrap()
    );
    assert_eq!(
        std::fs::read(fx.join("docs0.idx")).unwrap(),
        std::fs::read(fx.join("docs1.idx")).unwrap()
    );
    assert_eq!(&std::fs::read(fx.join("pq0.idx")).unwrap()[..8], b"OPRFLEX1");
    assert_eq!(
        &std::fs::read(fx.join("doc_embeddings.bin")).unwrap()[..8],
        b"OPRFEMB1"
    );

    // Worker count does not change the store bytes.
    for workers in ["1", "4"] {
        let out = oprf(
            &[
                "prepare",
                "--corpus",
                &format!("{fxs}/corpus.tsv"),
                "--pseudo-queries",
                &format!("{fxs}/pseudo_queries.tsv"),
                "--store",
                &format!("{fxs}/store_w{workers}.sto"),
                "--k",
                "40",
                "--models",
                &format!("dense:{fxs}/doc_embeddings.bin"),
                "--workers",
                workers,
            ],
            dir.path(),
        );
        assert_success(&out, "prepare");
    }
    assert_eq!(
        std::fs::read(fx.join("store_w1.sto")).unwrap(),
        std::fs::read(fx.join("store_w4.sto")).unwrap()
    );
    assert_eq!(&std::fs::read(fx.join("store_w1.sto")).unwrap()[..8], b"OPRFSTO1");

    // Search twice: identical run files.
    for round in 0..2 {
        let out = oprf(
            &[
                "search",
                "--store",
                &format!("{fxs}/store_w1.sto"),
                "--pq-index",
                &format!("{fxs}/pq0.idx"),
                "--corpus",
                &format!("{fxs}/corpus.tsv"),
                "--topics",
                &format!("{fxs}/topics.tsv"),
                "--s",
                "4",
                "--out",
                &format!("{fxs}/run{round}.trec"),
                "--timing",
                &format!("{fxs}/timing{round}.csv"),
            ],
            dir.path(),
        );
        assert_success(&out, "search");
    }
    assert_eq!(
        std::fs::read(fx.join("run0.trec")).unwrap(),
        std::fs::read(fx.join("run1.trec")).unwrap()
    );

    // Fusion with RM3 over the expanded document index also runs.
    let out = oprf(
        &[
            "search",
            "--store",
            &format!("{fxs}/store_w1.sto"),
            "--pq-index",
            &format!("{fxs}/pq0.idx"),
            "--corpus",
            &format!("{fxs}/corpus.tsv"),
            "--topics",
            &format!("{fxs}/topics.tsv"),
            "--fuse-original",
            "--doc-index",
            &format!("{fxs}/docs0.idx"),
            "--rm3",
            "--out",
            &format!("{fxs}/run_fused.trec"),
        ],
        dir.path(),
    );
    assert_success(&out, "search with fusion");

    // Evaluate and compare the two systems.
    let out = oprf(
        &[
            "eval",
            "--run",
            &format!("{fxs}/run0.trec"),
            "--qrels",
            &format!("{fxs}/qrels.txt"),
            "--compare",
            &format!("{fxs}/run_fused.trec"),
            "--sig",
            "--csv",
            &format!("{fxs}/metrics.csv"),
            "--timing",
            &format!("plain={fxs}/timing0.csv"),
        ],
        dir.path(),
    );
    assert_success(&out, "eval");
    let text = stdout(&out);
    assert!(text.contains("ndcg@10"), "stdout: {text}");
    let csv = std::fs::read_to_string(fx.join("metrics.csv")).unwrap();
    assert!(csv.lines().count() >= 4, "csv: {csv}");
    assert!(csv.starts_with("metric,"), "csv: {csv}");

    // Sweep over s writes its CSV.
    let out = oprf(
        &[
            "sweep",
            "--param",
            "s",
            "--values",
            "1,2,4",
            "--store",
            &format!("{fxs}/store_w1.sto"),
            "--pq-index",
            &format!("{fxs}/pq0.idx"),
            "--corpus",
            &format!("{fxs}/corpus.tsv"),
            "--topics",
            &format!("{fxs}/topics.tsv"),
            "--qrels",
            &format!("{fxs}/qrels.txt"),
            "--out",
            &format!("{fxs}/sweep.csv"),
        ],
        dir.path(),
    );
    assert_success(&out, "sweep");
    let sweep_csv = std::fs::read_to_string(fx.join("sweep.csv")).unwrap();
    assert_eq!(sweep_csv.lines().count(), 4, "csv: {sweep_csv}");
}

#[test]
fn pipeline_skips_and_reruns_by_content_hash() {
    let dir = tempfile::tempdir().unwrap();
    let fx = build_fixture(dir.path());
    let fxs = fx.to_str().unwrap();
    let config_path = dir.path().join("pipeline.cfg");
    std::fs::write(
        &config_path,
        format!(
            "# pipeline fixture\n\
             corpus={fxs}/corpus.tsv\n\
             pseudo_queries={fxs}/pseudo_queries.tsv\n\
             topics={fxs}/topics.tsv\n\
             qrels={fxs}/qrels.txt\n\
             out_dir={fxs}/build\n\
             models=dense:{fxs}/doc_embeddings.bin\n\
             k=40\n\
             workers=2\n\
             s=4\n"
        ),
    )
    .unwrap();
    let cfg = config_path.to_str().unwrap();

    // Fresh: all stages run.
    let out = oprf(&["pipeline", "--config", cfg], dir.path());
    assert_success(&out, "pipeline first run");
    let text = stdout(&out);
    for stage in ["index", "prepare", "search", "eval"] {
        assert!(text.contains(&format!("[{stage}] running")), "first run: {text}");
    }

    // Unchanged: all stages skipped.
    let out = oprf(&["pipeline", "--config", cfg], dir.path());
    assert_success(&out, "pipeline second run");
    let text = stdout(&out);
    for stage in ["index", "prepare", "search", "eval"] {
        assert!(
            text.contains(&format!("[{stage}] skipped")),
            "second run: {text}"
        );
    }

    // Touching only the topics reruns search and eval, not index/prepare.
    // The new topic reuses an existing query's text so the run file really
    // changes and eval has fresh input.
    let topics_path = fx.join("topics.tsv");
    let mut topics = std::fs::read_to_string(&topics_path).unwrap();
    let first_text = topics.lines().next().unwrap().split_once('\t').unwrap().1.to_string();
    topics.push_str(&format!("qextra\t{first_text}\n"));
    std::fs::write(&topics_path, topics).unwrap();
    let out = oprf(&["pipeline", "--config", cfg], dir.path());
    assert_success(&out, "pipeline after topics edit");
    let text = stdout(&out);
    assert!(text.contains("[index] skipped"), "{text}");
    assert!(text.contains("[prepare] skipped"), "{text}");
    assert!(text.contains("[search] running"), "{text}");
    assert!(text.contains("[eval] running"), "{text}");

    // A config override is part of the stage hash: changing s reruns search.
    let out = oprf(&["pipeline", "--config", cfg, "--s", "2"], dir.path());
    assert_success(&out, "pipeline with override");
    let text = stdout(&out);
    assert!(text.contains("[prepare] skipped"), "{text}");
    assert!(text.contains("[search] running"), "{text}");
}

#[test]
fn pipeline_doc_index_placeholder_feeds_a_lexical_model() {
    let dir = tempfile::tempdir().unwrap();
    let fx = build_fixture(dir.path());
    let fxs = fx.to_str().unwrap();
    let config_path = dir.path().join("lex.cfg");
    std::fs::write(
        &config_path,
        format!(
            "corpus={fxs}/corpus.tsv\n\
             pseudo_queries={fxs}/pseudo_queries.tsv\n\
             topics={fxs}/topics.tsv\n\
             qrels={fxs}/qrels.txt\n\
             out_dir={fxs}/lexbuild\n\
             models=expanded=lex:@doc-index\n\
             expand=true\n\
             k=40\n"
        ),
    )
    .unwrap();
    let out = oprf(
        &["pipeline", "--config", config_path.to_str().unwrap()],
        dir.path(),
    );
    assert_success(&out, "lexical pipeline");
    assert!(fx.join("lexbuild/run.trec").exists());
    assert!(fx.join("lexbuild/metrics.csv").exists());
}

#[test]
fn synth_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = oprf(
            &[
                "synth",
                "--out-dir",
                dir.path().join(sub).to_str().unwrap(),
                "--n-docs",
                "40",
                "--m",
                "3",
                "--seed",
                "7",
            ],
            dir.path(),
        );
        assert_success(&out, "synth");
    }
    for file in [
        "corpus.tsv",
        "pseudo_queries.tsv",
        "topics.tsv",
        "qrels.txt",
        "doc_embeddings.bin",
    ] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(file)).unwrap(),
            std::fs::read(dir.path().join("b").join(file)).unwrap(),
            "{file} differs across identical seeds"
        );
    }
}
