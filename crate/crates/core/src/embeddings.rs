//! Embedding stores, contextual document files, windowed document
//! embedding and cosine similarity.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::data::{jsonl_lines, read_to_string};
use crate::error::{Error, Result};
use crate::text::{segment_sliding, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Token,
    Concept,
}

/// Key → vector table. All vectors have length `dim` and none is all-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    kind: EmbeddingKind,
    table: IndexMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, kind: EmbeddingKind) -> Self {
        EmbeddingStore {
            dim,
            kind,
            table: IndexMap::new(),
        }
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let key = key.into();
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                line: self.table.len() + 2,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroVector(key));
        }
        if self.table.contains_key(&key) {
            return Err(Error::DuplicateKey(key));
        }
        self.table.insert(key, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.table.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.table.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Component-wise mean of all vectors; `None` for an empty store.
    pub fn mean_vector(&self) -> Option<Vec<f64>> {
        if self.table.is_empty() {
            return None;
        }
        let mut mean = vec![0.0; self.dim];
        for v in self.table.values() {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        let n = self.table.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Some(mean)
    }
}

pub fn load_store(path: &Path, kind: EmbeddingKind) -> Result<EmbeddingStore> {
    parse_store(&read_to_string(path)?, kind)
}

/// Parses `<count> <dim>` followed by `key v1 ... v_dim` lines.
pub fn parse_store(text: &str, kind: EmbeddingKind) -> Result<EmbeddingStore> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::HeaderMismatch("missing `<count> <dim>` header".into()))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::HeaderMismatch(format!("bad header `{header}`")))?;
    let [count, dim] = nums[..] else {
        return Err(Error::HeaderMismatch(format!("bad header `{header}`")));
    };
    if dim == 0 {
        return Err(Error::HeaderMismatch("dimension must be positive".into()));
    }

    let mut store = EmbeddingStore::new(dim, kind);
    for (line, content) in lines {
        let mut parts = content.split_whitespace();
        let key = parts.next().expect("non-blank line has a field");
        let vector: Vec<f64> = parts
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::parse(line, format!("bad float `{s}`")))
            })
            .collect::<Result<_>>()?;
        if vector.len() != dim {
            return Err(Error::DimMismatch {
                line,
                expected: dim,
                found: vector.len(),
            });
        }
        store.insert(key, vector)?;
    }
    if store.len() != count {
        return Err(Error::HeaderMismatch(format!(
            "header declares {count} entries, found {}",
            store.len()
        )));
    }
    Ok(store)
}

pub fn write_store(store: &EmbeddingStore) -> String {
    let mut out = format!("{} {}\n", store.len(), store.dim());
    for (key, v) in store.iter() {
        out.push_str(key);
        for x in v {
            out.push(' ');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

/// Cosine similarity, clamped to [-1, 1] against rounding.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector("cosine operand".into()));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    System,
    Reference,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::System => "SYSTEM",
            Side::Reference => "REFERENCE",
        })
    }
}

/// One vector per token of a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocEmbedding {
    pub pair_id: String,
    pub side: Side,
    pub tokens: Vec<String>,
    #[serde(rename = "vectors")]
    pub matrix: Vec<Vec<f64>>,
}

impl DocEmbedding {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    /// Keeps the first `n` tokens and their rows.
    pub fn truncated(&self, n: usize) -> DocEmbedding {
        DocEmbedding {
            pair_id: self.pair_id.clone(),
            side: self.side,
            tokens: self.tokens.iter().take(n).cloned().collect(),
            matrix: self.matrix.iter().take(n).cloned().collect(),
        }
    }
}

/// Produces one vector per token for a single window of tokens.
pub trait SegmentEncoder {
    fn dim(&self) -> usize;
    fn encode(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>>;
}

/// Position-independent lookup in a token store. Unknown tokens share the
/// mean vector of the store.
#[derive(Debug, Clone)]
pub struct StaticEncoder<'a> {
    store: &'a EmbeddingStore,
    unk: Option<Vec<f64>>,
}

impl<'a> StaticEncoder<'a> {
    pub fn new(store: &'a EmbeddingStore) -> Self {
        let unk = store.mean_vector().filter(|m| m.iter().any(|&x| x != 0.0));
        StaticEncoder { store, unk }
    }

    pub fn unk_vector(&self) -> Option<&[f64]> {
        self.unk.as_deref()
    }

    fn lookup(&self, token: &str) -> Result<&[f64]> {
        self.store
            .get(token)
            .or(self.unk.as_deref())
            .ok_or_else(|| {
                Error::Provider(format!(
                    "token `{token}` not in store and the store mean is zero"
                ))
            })
    }
}

impl SegmentEncoder for StaticEncoder<'_> {
    fn dim(&self) -> usize {
        self.store.dim()
    }

    fn encode(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>> {
        tokens
            .iter()
            .map(|t| self.lookup(t).map(<[f64]>::to_vec))
            .collect()
    }
}

/// Embeds a document window by window. Tokens inside an overlap keep the
/// row from the earlier segment, so the result has exactly one row per
/// token.
pub fn embed_document(
    pair_id: &str,
    side: Side,
    tokens: &[String],
    encoder: &dyn SegmentEncoder,
    window: Window,
) -> Result<DocEmbedding> {
    let mut matrix: Vec<Vec<f64>> = Vec::with_capacity(tokens.len());
    for segment in segment_sliding(tokens.len(), window) {
        let rows = encoder.encode(&tokens[segment.start..segment.end])?;
        if rows.len() != segment.len() {
            return Err(Error::Provider(format!(
                "encoder returned {} rows for {} tokens",
                rows.len(),
                segment.len()
            )));
        }
        let already = matrix.len() - segment.start;
        for row in rows.into_iter().skip(already) {
            if row.len() != encoder.dim() {
                return Err(Error::Provider(format!(
                    "encoder returned a row of length {}, expected {}",
                    row.len(),
                    encoder.dim()
                )));
            }
            matrix.push(row);
        }
    }
    Ok(DocEmbedding {
        pair_id: pair_id.to_string(),
        side,
        tokens: tokens.to_vec(),
        matrix,
    })
}

/// Precomputed per-document embeddings keyed by `(pair_id, side)`.
#[derive(Debug, Clone, Default)]
pub struct ContextualStore {
    docs: HashMap<(String, Side), DocEmbedding>,
    dim: Option<usize>,
}

impl ContextualStore {
    pub fn insert(&mut self, doc: DocEmbedding) -> Result<()> {
        if doc.tokens.len() != doc.matrix.len() {
            return Err(Error::LengthMismatch {
                left: doc.tokens.len(),
                right: doc.matrix.len(),
            });
        }
        if doc.is_empty() {
            return Err(Error::EmptyDocument);
        }
        let dim = *self.dim.get_or_insert(doc.dim());
        for (row, token) in doc.matrix.iter().zip(&doc.tokens) {
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    line: self.docs.len() + 1,
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::NaNValue(doc.pair_id.clone()));
            }
            if row.iter().all(|&x| x == 0.0) {
                return Err(Error::ZeroVector(format!(
                    "{}/{}/{token}",
                    doc.pair_id, doc.side
                )));
            }
        }
        let key = (doc.pair_id.clone(), doc.side);
        if self.docs.contains_key(&key) {
            return Err(Error::DuplicateKey(format!("{}/{}", doc.pair_id, doc.side)));
        }
        self.docs.insert(key, doc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Looks up a stored document. When `expected` is given the stored
    /// token list must equal it exactly.
    pub fn document(
        &self,
        pair_id: &str,
        side: Side,
        expected: Option<&[String]>,
    ) -> Result<&DocEmbedding> {
        let doc = self
            .docs
            .get(&(pair_id.to_string(), side))
            .ok_or_else(|| Error::MissingPair {
                pair_id: pair_id.to_string(),
                what: format!("{side} embedding"),
            })?;
        if let Some(tokens) = expected {
            if doc.tokens != tokens {
                return Err(Error::TokenMismatch {
                    pair_id: pair_id.to_string(),
                    side: side.to_string(),
                });
            }
        }
        Ok(doc)
    }
}

pub fn load_contextual(path: &Path) -> Result<ContextualStore> {
    parse_contextual(&read_to_string(path)?)
}

pub fn parse_contextual(text: &str) -> Result<ContextualStore> {
    let mut store = ContextualStore::default();
    for (line, content) in jsonl_lines(text) {
        let doc: DocEmbedding =
            serde_json::from_str(content).map_err(|e| Error::parse(line, e.to_string()))?;
        store.insert(doc).map_err(|e| match e {
            Error::DimMismatch {
                expected, found, ..
            } => Error::DimMismatch {
                line,
                expected,
                found,
            },
            other => other,
        })?;
    }
    Ok(store)
}

pub fn write_contextual<'a>(docs: impl IntoIterator<Item = &'a DocEmbedding>) -> String {
    docs.into_iter()
        .map(|d| serde_json::to_string(d).expect("doc serializes") + "\n")
        .collect()
}
