//! Inverted index construction and binary persistence.
//!
//! On-disk layout (`OPRFLEX1`, little-endian):
//! header (N: u64, avg_len: f64), analyzer block, per-item token counts,
//! then a sorted term dictionary of length-prefixed UTF-8 strings, each
//! followed by its postings as delta-encoded u32 ordinals with u32 term
//! frequencies.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::lexical::tokenizer::{StemmerKind, Tokenizer};

const MAGIC: &[u8; 8] = b"OPRFLEX1";

/// Immutable term → postings map over a set of dense-ordinal items.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    tokenizer: Tokenizer,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
}

impl InvertedIndex {
    /// Build from `(ordinal, text)` items. Ordinals must be exactly
    /// `0..items.len()`, in any order.
    pub fn build<I, S>(items: I, tokenizer: Tokenizer) -> Result<InvertedIndex>
    where
        I: IntoIterator<Item = (u32, S)>,
        S: AsRef<str>,
    {
        let mut collected: Vec<(u32, S)> = items.into_iter().collect();
        collected.sort_by_key(|(ord, _)| *ord);
        for (i, (ord, _)) in collected.iter().enumerate() {
            if *ord as usize != i {
                return Err(Error::invalid(format!(
                    "item ordinals must be dense 0..N-1; found {ord} at position {i}"
                )));
            }
        }

        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(collected.len());
        for (ordinal, text) in &collected {
            let tokens = tokenizer.tokenize(text.as_ref());
            doc_lengths.push(tokens.len() as u32);
            let mut freqs: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &tokens {
                *freqs.entry(t.as_str()).or_insert(0) += 1;
            }
            for (term, tf) in freqs {
                postings.entry(term.to_string()).or_default().push((*ordinal, tf));
            }
        }

        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            doc_lengths.iter().map(|&l| l as u64).sum::<u64>() as f64 / doc_lengths.len() as f64
        };

        Ok(InvertedIndex {
            tokenizer,
            postings,
            doc_lengths,
            avg_doc_length,
        })
    }

    pub fn n_items(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, ordinal: u32) -> u32 {
        self.doc_lengths.get(ordinal as usize).copied().unwrap_or(0)
    }

    pub fn postings(&self, term: &str) -> Option<&[(u32, u32)]> {
        self.postings.get(term).map(|v| v.as_slice())
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, |v| v.len())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[(u32, u32)])> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u64::<LittleEndian>(self.doc_lengths.len() as u64)?;
        w.write_f64::<LittleEndian>(self.avg_doc_length)?;
        w.write_u8(self.tokenizer.lowercase() as u8)?;
        w.write_u8(match self.tokenizer.stemmer_kind() {
            StemmerKind::None => 0,
            StemmerKind::Porter => 1,
        })?;
        w.write_u32::<LittleEndian>(self.tokenizer.stopwords().len() as u32)?;
        for word in self.tokenizer.stopwords() {
            write_str(w, word)?;
        }
        for &len in &self.doc_lengths {
            w.write_u32::<LittleEndian>(len)?;
        }
        w.write_u64::<LittleEndian>(self.postings.len() as u64)?;
        for (term, plist) in &self.postings {
            write_str(w, term)?;
            w.write_u32::<LittleEndian>(plist.len() as u32)?;
            let mut prev = 0u32;
            for &(ordinal, tf) in plist {
                w.write_u32::<LittleEndian>(ordinal - prev)?;
                w.write_u32::<LittleEndian>(tf)?;
                prev = ordinal;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<InvertedIndex> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        Self::read_from(&mut r).map_err(|e| match e {
            ReadError::Io(io) => Error::format(path, format!("unexpected end of file: {io}")),
            ReadError::Bad(msg) => Error::format(path, msg),
        })
    }

    fn read_from<R: Read>(r: &mut R) -> std::result::Result<InvertedIndex, ReadError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ReadError::Bad("bad magic, not an index file".into()));
        }
        let n = r.read_u64::<LittleEndian>()? as usize;
        let avg_doc_length = r.read_f64::<LittleEndian>()?;
        let lowercase = r.read_u8()? != 0;
        let stemmer = match r.read_u8()? {
            0 => StemmerKind::None,
            1 => StemmerKind::Porter,
            other => return Err(ReadError::Bad(format!("unknown stemmer tag {other}"))),
        };
        let n_stopwords = r.read_u32::<LittleEndian>()? as usize;
        let mut stopwords = std::collections::BTreeSet::new();
        for _ in 0..n_stopwords {
            stopwords.insert(read_str(r)?);
        }
        let mut doc_lengths = Vec::with_capacity(n);
        for _ in 0..n {
            doc_lengths.push(r.read_u32::<LittleEndian>()?);
        }
        let n_terms = r.read_u64::<LittleEndian>()? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = read_str(r)?;
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut plist = Vec::with_capacity(len);
            let mut prev = 0u32;
            for i in 0..len {
                let delta = r.read_u32::<LittleEndian>()?;
                let tf = r.read_u32::<LittleEndian>()?;
                let ordinal = if i == 0 { delta } else { prev + delta };
                plist.push((ordinal, tf));
                prev = ordinal;
            }
            postings.insert(term, plist);
        }
        Ok(InvertedIndex {
            tokenizer: Tokenizer::new(lowercase, stopwords, stemmer),
            postings,
            doc_lengths,
            avg_doc_length,
        })
    }
}

enum ReadError {
    Io(std::io::Error),
    Bad(String),
}

impl From<std::io::Error> for ReadError {
    fn from(e: std::io::Error) -> Self {
        ReadError::Io(e)
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_str<R: Read>(r: &mut R) -> std::result::Result<String, ReadError> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| ReadError::Bad("invalid UTF-8 in term dictionary".into()))
}
