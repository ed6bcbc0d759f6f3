//! Parsing and loading of `--models` specifications.
//!
//! Grammar, comma-separated: `[id=]dense:DOC_EMB[:PQ_EMB]` or
//! `[id=]lex:INDEX`. A dense model without a pseudo-query embedding file
//! hash-embeds the pseudo-query text into the document space. The default
//! model id is the stem of the first resource path.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use oprf_core::dense::{PrfConfig, PrfMode};
use oprf_core::lexical::{Bm25Params, InvertedIndex, Tokenizer};
use oprf_core::offline::{
    DenseResources, LexicalResources, ModelRegistry, ModelResources, ModelSpec, PqVectors,
};
use oprf_core::EmbeddingMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedModel {
    Dense {
        id: String,
        doc_embeddings: PathBuf,
        pq_embeddings: Option<PathBuf>,
    },
    Lexical { id: String, index: PathBuf },
}

impl ParsedModel {
    pub fn id(&self) -> &str {
        match self {
            ParsedModel::Dense { id, .. } | ParsedModel::Lexical { id, .. } => id,
        }
    }

    pub fn paths(&self) -> Vec<&Path> {
        match self {
            ParsedModel::Dense {
                doc_embeddings,
                pq_embeddings,
                ..
            } => {
                let mut p = vec![doc_embeddings.as_path()];
                if let Some(pq) = pq_embeddings {
                    p.push(pq.as_path());
                }
                p
            }
            ParsedModel::Lexical { index, .. } => vec![index.as_path()],
        }
    }
}

fn stem_of(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}

pub fn parse_models(spec: &str) -> Result<Vec<ParsedModel>> {
    let mut out = Vec::new();
    for part in spec.split(',').filter(|p| !p.is_empty()) {
        let (explicit_id, rest) = match part.split_once('=') {
            Some((id, rest)) if !id.contains(':') => (Some(id.to_string()), rest),
            _ => (None, part),
        };
        let mut pieces = rest.split(':');
        let kind = pieces.next().unwrap_or_default();
        let model = match kind {
            "dense" => {
                let doc = pieces
                    .next()
                    .filter(|p| !p.is_empty())
                    .with_context(|| format!("model {part:?}: missing embedding path"))?;
                let pq = pieces.next().filter(|p| !p.is_empty());
                if pieces.next().is_some() {
                    bail!("model {part:?}: too many path components");
                }
                ParsedModel::Dense {
                    id: explicit_id.unwrap_or_else(|| stem_of(doc)),
                    doc_embeddings: PathBuf::from(doc),
                    pq_embeddings: pq.map(PathBuf::from),
                }
            }
            "lex" => {
                let index = pieces
                    .next()
                    .filter(|p| !p.is_empty())
                    .with_context(|| format!("model {part:?}: missing index path"))?;
                if pieces.next().is_some() {
                    bail!("model {part:?}: too many path components");
                }
                ParsedModel::Lexical {
                    id: explicit_id.unwrap_or_else(|| stem_of(index)),
                    index: PathBuf::from(index),
                }
            }
            other => bail!("model {part:?}: unknown kind {other:?} (expected dense or lex)"),
        };
        out.push(model);
    }
    if out.is_empty() {
        bail!("--models must list at least one model");
    }
    let mut ids: Vec<&str> = out.iter().map(|m| m.id()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        bail!("duplicate model ids; disambiguate with `id=kind:path`");
    }
    Ok(out)
}

/// Load resources and assemble the registry. `prf` applies to dense models;
/// lexical models always score the raw pseudo-query text.
pub fn load_registry(
    parsed: &[ParsedModel],
    prf: PrfConfig,
    bm25: Bm25Params,
) -> Result<ModelRegistry> {
    let mut specs = Vec::with_capacity(parsed.len());
    for model in parsed {
        let spec = match model {
            ParsedModel::Dense {
                id,
                doc_embeddings,
                pq_embeddings,
            } => {
                let docs = EmbeddingMatrix::load(doc_embeddings)
                    .with_context(|| format!("model {id}: loading document embeddings"))?;
                let pq_vectors = match pq_embeddings {
                    Some(path) => PqVectors::Matrix(
                        EmbeddingMatrix::load(path)
                            .with_context(|| format!("model {id}: loading pseudo-query embeddings"))?,
                    ),
                    None => PqVectors::Hashed(Tokenizer::english()),
                };
                ModelSpec {
                    model_id: id.clone(),
                    resources: ModelResources::Dense(DenseResources {
                        doc_embeddings: docs,
                        pq_vectors,
                    }),
                    prf,
                }
            }
            ParsedModel::Lexical { id, index } => ModelSpec {
                model_id: id.clone(),
                resources: ModelResources::Lexical(LexicalResources {
                    index: InvertedIndex::load(index)
                        .with_context(|| format!("model {id}: loading index"))?,
                    bm25,
                }),
                prf: PrfConfig {
                    mode: PrfMode::None,
                    depth: 0,
                },
            },
        };
        specs.push(spec);
    }
    Ok(ModelRegistry::new(specs)?)
}
