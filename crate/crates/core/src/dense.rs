//! Single-vector embeddings, exact inner-product retrieval, and vector PRF.
//!
//! Retrieval is exhaustive by design: approximate neighbor search is out of
//! scope, and the scan doubles as the reference path against which any
//! future shortcut must be checked.
//!
//! Embedding file layout (`OPRFEMB1`, little-endian): header (count: u64,
//! dim: u32), then `count` records of (ordinal: u32, dim × f32).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::hash::fnv1a64;
use crate::lexical::Tokenizer;

const MAGIC: &[u8; 8] = b"OPRFEMB1";

/// Row-major f32 matrix with an ordinal → row map.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    dim: usize,
    ordinals: Vec<u32>,
    data: Vec<f32>,
    by_ordinal: HashMap<u32, usize>,
}

impl EmbeddingMatrix {
    pub fn from_rows<I>(dim: usize, rows: I) -> Result<EmbeddingMatrix>
    where
        I: IntoIterator<Item = (u32, Vec<f32>)>,
    {
        let mut m = EmbeddingMatrix {
            dim,
            ordinals: Vec::new(),
            data: Vec::new(),
            by_ordinal: HashMap::new(),
        };
        for (ordinal, row) in rows {
            m.push(ordinal, &row)?;
        }
        Ok(m)
    }

    fn push(&mut self, ordinal: u32, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { ordinal });
        }
        if self.by_ordinal.contains_key(&ordinal) {
            return Err(Error::invalid(format!("duplicate embedding ordinal {ordinal}")));
        }
        self.by_ordinal.insert(ordinal, self.ordinals.len());
        self.ordinals.push(ordinal);
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.ordinals.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, ordinal: u32) -> Option<&[f32]> {
        self.by_ordinal
            .get(&ordinal)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    fn row_at(&self, idx: usize) -> &[f32] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            w.write_all(MAGIC)?;
            w.write_u64::<LittleEndian>(self.ordinals.len() as u64)?;
            w.write_u32::<LittleEndian>(self.dim as u32)?;
            for (i, &ordinal) in self.ordinals.iter().enumerate() {
                w.write_u32::<LittleEndian>(ordinal)?;
                for &v in self.row_at(i) {
                    w.write_f32::<LittleEndian>(v)?;
                }
            }
            Ok(())
        };
        write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<EmbeddingMatrix> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|e| Error::format(path, format!("unexpected end of file: {e}")))?;
        if &magic != MAGIC {
            return Err(Error::format(path, "bad magic, not an embedding file"));
        }
        let count = r
            .read_u64::<LittleEndian>()
            .map_err(|e| Error::format(path, e.to_string()))? as usize;
        let dim = r
            .read_u32::<LittleEndian>()
            .map_err(|e| Error::format(path, e.to_string()))? as usize;
        if dim == 0 {
            return Err(Error::format(path, "zero embedding dimension"));
        }
        let mut m = EmbeddingMatrix {
            dim,
            ordinals: Vec::with_capacity(count),
            data: Vec::with_capacity(count * dim),
            by_ordinal: HashMap::with_capacity(count),
        };
        let mut row = vec![0f32; dim];
        for _ in 0..count {
            let ordinal = r
                .read_u32::<LittleEndian>()
                .map_err(|e| Error::format(path, format!("truncated record: {e}")))?;
            for slot in row.iter_mut() {
                *slot = r
                    .read_f32::<LittleEndian>()
                    .map_err(|e| Error::format(path, format!("truncated record: {e}")))?;
            }
            m.push(ordinal, &row)?;
        }
        Ok(m)
    }
}

/// Feature-hashed, L2-normalized text embedding. Each token occurrence
/// contributes ±1 at a position fixed by a 64-bit FNV hash of the token; a
/// second hash picks the sign. A deterministic stand-in for learned
/// encoders, which are ingested from files rather than run here.
///
/// Returns the vector and whether the text produced any tokens; token-free
/// text yields an (unnormalized) zero vector.
pub fn hash_embed(text: &str, dim: usize, tokenizer: &Tokenizer) -> (Vec<f32>, bool) {
    assert!(dim > 0, "embedding dimension must be positive");
    let tokens = tokenizer.tokenize(text);
    let mut vector = vec![0f32; dim];
    if tokens.is_empty() {
        return (vector, false);
    }
    for token in &tokens {
        let h = fnv1a64(token.as_bytes());
        let position = (h % dim as u64) as usize;
        let sign_hash = fnv1a64_sign(token.as_bytes());
        vector[position] += if sign_hash { 1.0 } else { -1.0 };
    }
    let norm: f32 = vector.iter().map(|v| v * v).sum::<f32>().sqrt();
    if norm > 0.0 {
        for v in vector.iter_mut() {
            *v /= norm;
        }
    }
    (vector, true)
}

fn fnv1a64_sign(bytes: &[u8]) -> bool {
    // Independent second hash: same FNV stream continued over a salt byte.
    crate::hash::fnv1a64_seeded(fnv1a64(bytes), &[0x5a]) & 1 == 1
}

/// Exact top-`k` by inner product, sorted by (score desc, ordinal asc).
pub fn dense_topk(docs: &EmbeddingMatrix, query: &[f32], k: usize) -> Result<Vec<(u32, f32)>> {
    if query.len() != docs.dim() {
        return Err(Error::DimMismatch {
            expected: docs.dim(),
            got: query.len(),
        });
    }
    let mut scored: Vec<(u32, f32)> = (0..docs.count())
        .map(|i| (docs.ordinals[i], dot(docs.row_at(i), query)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    Ok(scored)
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrfMode {
    None,
    Avg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrfConfig {
    pub mode: PrfMode,
    pub depth: usize,
}

impl Default for PrfConfig {
    fn default() -> Self {
        PrfConfig {
            mode: PrfMode::Avg,
            depth: 3,
        }
    }
}

/// Average-vector PRF: retrieve the top-`depth` documents for `query` and
/// return the arithmetic mean of the query vector and their vectors, all
/// with equal weight. `depth = 0` returns the query unchanged.
pub fn prf_avg(docs: &EmbeddingMatrix, query: &[f32], cfg: &PrfConfig) -> Result<Vec<f32>> {
    debug_assert_eq!(cfg.mode, PrfMode::Avg);
    if cfg.depth == 0 {
        return Ok(query.to_vec());
    }
    let feedback = dense_topk(docs, query, cfg.depth)?;
    let mut refined: Vec<f32> = query.to_vec();
    for &(ordinal, _) in &feedback {
        let row = docs.row(ordinal).expect("ordinal came from this matrix");
        for (r, v) in refined.iter_mut().zip(row) {
            *r += v;
        }
    }
    let n = (feedback.len() + 1) as f32;
    for r in refined.iter_mut() {
        *r /= n;
    }
    Ok(refined)
}
