//! Collection ingestion and TREC-format I/O.
//!
//! Documents, pseudo-queries, topics, and relevance judgments all enter the
//! system through this module, which owns the external-ID ↔ ordinal mapping
//! and the run-file format used by every downstream evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// A corpus passage with a stable external ID and a dense internal ordinal.
#[derive(Debug, Clone)]
pub struct Document {
    pub ext_id: String,
    pub ordinal: u32,
    pub text: String,
}

/// Immutable document collection. Ordinals are assigned in input order and
/// form a bijection onto `0..len()`.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_ext_id: HashMap<String, u32>,
}

impl Corpus {
    pub fn from_records<I, S, T>(records: I) -> Result<Corpus>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut corpus = Corpus::default();
        for (line_no, (id, text)) in records.into_iter().enumerate() {
            corpus.push(id.into(), text.into(), line_no + 1)?;
        }
        Ok(corpus)
    }

    fn push(&mut self, ext_id: String, text: String, line_no: usize) -> Result<()> {
        if text.trim().is_empty() {
            return Err(Error::invalid(format!(
                "line {line_no}: document {ext_id:?} has empty text"
            )));
        }
        if self.by_ext_id.contains_key(&ext_id) {
            return Err(Error::DuplicateDocId(ext_id));
        }
        let ordinal = self.docs.len() as u32;
        self.by_ext_id.insert(ext_id.clone(), ordinal);
        self.docs.push(Document {
            ext_id,
            ordinal,
            text,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, ordinal: u32) -> Option<&Document> {
        self.docs.get(ordinal as usize)
    }

    pub fn ordinal_of(&self, ext_id: &str) -> Option<u32> {
        self.by_ext_id.get(ext_id).copied()
    }

    pub fn ext_id(&self, ordinal: u32) -> Option<&str> {
        self.get(ordinal).map(|d| d.ext_id.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.docs.iter()
    }

    /// Ordinal → external-ID table, in ordinal order.
    pub fn ext_id_table(&self) -> Vec<String> {
        self.docs.iter().map(|d| d.ext_id.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

#[derive(Deserialize)]
struct JsonDoc {
    id: String,
    text: String,
}

/// Load a document collection. TSV lines are `ext_id \t text`; JSONL records
/// are `{"id": ..., "text": ...}`. Ordinals follow file order.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut corpus = Corpus::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (id, text) = match format {
            CorpusFormat::Tsv => {
                let (id, text) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(path, line_no, "expected `id<TAB>text`"))?;
                (id.to_string(), text.to_string())
            }
            CorpusFormat::Jsonl => {
                let doc: JsonDoc = serde_json::from_str(&line)
                    .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
                (doc.id, doc.text)
            }
        };
        corpus.push(id, text, line_no).map_err(|e| match e {
            Error::Invalid(msg) => Error::parse(path, line_no, msg),
            other => other,
        })?;
    }
    Ok(corpus)
}

/// A short generated query tied to the documents whose pseudo-query sets
/// contained it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoQuery {
    pub pq_id: u32,
    /// Canonical text: Unicode-normalized, lowercased, whitespace-collapsed.
    pub text: String,
    pub source_docs: BTreeSet<u32>,
}

/// Canonical form used for exact-duplicate merging: NFC normalization,
/// lowercasing, and whitespace collapsing.
pub fn normalize_pq_text(text: &str) -> String {
    let normalized: String = text.nfc().collect::<String>().to_lowercase();
    normalized.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Merge `(source ordinal, raw text)` pairs into deduplicated pseudo-queries.
/// IDs are assigned densely in first-occurrence order of the canonical text.
pub fn dedup_pseudo_queries<I>(pairs: I) -> Vec<PseudoQuery>
where
    I: IntoIterator<Item = (u32, String)>,
{
    let mut by_text: HashMap<String, usize> = HashMap::new();
    let mut out: Vec<PseudoQuery> = Vec::new();
    for (source, raw) in pairs {
        let text = normalize_pq_text(&raw);
        if text.is_empty() {
            continue;
        }
        match by_text.get(&text) {
            Some(&idx) => {
                out[idx].source_docs.insert(source);
            }
            None => {
                let pq_id = out.len() as u32;
                by_text.insert(text.clone(), out.len());
                out.push(PseudoQuery {
                    pq_id,
                    text,
                    source_docs: BTreeSet::from([source]),
                });
            }
        }
    }
    out
}

/// Load `doc_ext_id \t pseudo-query text` lines and merge exact duplicates.
pub fn load_pseudo_queries(path: &Path, corpus: &Corpus) -> Result<Vec<PseudoQuery>> {
    let pairs = read_pseudo_query_lines(path, corpus)?;
    Ok(dedup_pseudo_queries(pairs))
}

/// The raw `(source ordinal, text)` pairs of a pseudo-query file, in file
/// order, before deduplication. Sweeps over the generation budget need the
/// per-document groups this preserves.
pub fn read_pseudo_query_lines(path: &Path, corpus: &Corpus) -> Result<Vec<(u32, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, line_no, "expected `doc_ext_id<TAB>text`"))?;
        let ordinal = corpus.ordinal_of(id).ok_or_else(|| Error::UnknownDocId {
            path: path.to_path_buf(),
            line: line_no,
            id: id.to_string(),
        })?;
        pairs.push((ordinal, text.to_string()));
    }
    Ok(pairs)
}

/// A live query: `qid \t text`.
#[derive(Debug, Clone)]
pub struct Topic {
    pub qid: String,
    pub text: String,
}

pub fn load_topics(path: &Path) -> Result<Vec<Topic>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut topics = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (qid, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, line_no, "expected `qid<TAB>text`"))?;
        if !seen.insert(qid.to_string()) {
            return Err(Error::parse(path, line_no, format!("duplicate qid {qid:?}")));
        }
        topics.push(Topic {
            qid: qid.to_string(),
            text: text.to_string(),
        });
    }
    Ok(topics)
}

/// TREC relevance judgments: `(qid, ext_id) → grade`.
#[derive(Debug, Clone, Default)]
pub struct Qrels {
    entries: BTreeMap<String, HashMap<String, u32>>,
}

impl Qrels {
    pub fn insert(&mut self, qid: &str, ext_id: &str, grade: u32) -> Result<()> {
        let per_query = self.entries.entry(qid.to_string()).or_default();
        if per_query.insert(ext_id.to_string(), grade).is_some() {
            return Err(Error::invalid(format!(
                "duplicate qrels entry ({qid}, {ext_id})"
            )));
        }
        Ok(())
    }

    pub fn grade(&self, qid: &str, ext_id: &str) -> u32 {
        self.entries
            .get(qid)
            .and_then(|m| m.get(ext_id).copied())
            .unwrap_or(0)
    }

    pub fn judged(&self, qid: &str) -> Option<&HashMap<String, u32>> {
        self.entries.get(qid)
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    /// Highest grade anywhere in the judgments; drives the default
    /// binarization threshold (grade ≥ 2 for graded sets, ≥ 1 for binary).
    pub fn max_grade(&self) -> u32 {
        self.entries
            .values()
            .flat_map(|m| m.values().copied())
            .max()
            .unwrap_or(0)
    }
}

/// Parse TREC qrels: `qid 0 ext_id grade`.
pub fn load_qrels(path: &Path) -> Result<Qrels> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut qrels = Qrels::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, line_no, "expected 4 fields"));
        }
        let grade: u32 = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad grade {:?}", fields[3])))?;
        qrels.insert(fields[0], fields[2], grade).map_err(|e| match e {
            Error::Invalid(msg) => Error::parse(path, line_no, msg),
            other => other,
        })?;
    }
    Ok(qrels)
}

/// One ranked entry of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub ext_id: String,
    pub rank: u32,
    pub score: f64,
}

/// A TREC run: per-query ranked lists plus a system tag. Ranks within a
/// query are contiguous from 1; scores are non-increasing with rank and
/// ties are broken by ascending external ID.
#[derive(Debug, Clone)]
pub struct RunFile {
    pub tag: String,
    rankings: BTreeMap<String, Vec<RunEntry>>,
}

impl RunFile {
    pub fn new(tag: impl Into<String>) -> Self {
        RunFile {
            tag: tag.into(),
            rankings: BTreeMap::new(),
        }
    }

    /// Sorts by (score desc, ext_id asc), assigns 1-based ranks, and stores
    /// the list. Duplicate documents within a query are rejected.
    pub fn add_ranking(&mut self, qid: &str, mut scored: Vec<(String, f64)>) -> Result<()> {
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        let mut seen = BTreeSet::new();
        let entries = scored
            .into_iter()
            .enumerate()
            .map(|(i, (ext_id, score))| {
                if !seen.insert(ext_id.clone()) {
                    return Err(Error::invalid(format!(
                        "duplicate document {ext_id:?} in ranking for {qid}"
                    )));
                }
                Ok(RunEntry {
                    ext_id,
                    rank: i as u32 + 1,
                    score,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.rankings.insert(qid.to_string(), entries);
        Ok(())
    }

    pub fn ranking(&self, qid: &str) -> Option<&[RunEntry]> {
        self.rankings.get(qid).map(|v| v.as_slice())
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.rankings.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }
}

/// Write the TREC 6-column format: `qid Q0 ext_id rank score tag`, scores at
/// 6 decimal places.
pub fn write_run(path: &Path, run: &RunFile) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (qid, entries) in &run.rankings {
        for e in entries {
            writeln!(w, "{} Q0 {} {} {:.6} {}", qid, e.ext_id, e.rank, e.score, run.tag)
                .map_err(|err| Error::io(path, err))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_run(path: &Path) -> Result<RunFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut run = RunFile::new("");
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(path, line_no, "expected 6 fields"));
        }
        let rank: u32 = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad rank {:?}", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad score {:?}", fields[4])))?;
        run.tag = fields[5].to_string();
        run.rankings
            .entry(fields[0].to_string())
            .or_default()
            .push(RunEntry {
                ext_id: fields[2].to_string(),
                rank,
                score,
            });
    }
    Ok(run)
}
