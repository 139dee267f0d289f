//! Feature extraction: term vocabulary with document frequencies, TF-IDF,
//! pretrained word embeddings, and the contextual-encoder adapter contract.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{EncodedSequence, PAD_ID};

/// A fitted term vocabulary. Ids are assigned in lexicographic term order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    term_to_id: BTreeMap<String, usize>,
    document_frequency: Vec<usize>,
    pub n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.term_to_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_to_id.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn df(&self, id: usize) -> usize {
        self.document_frequency[id]
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, usize)> {
        self.term_to_id.iter().map(|(t, &i)| (t.as_str(), i))
    }

    /// Persist as term-per-line in id order, with df counts.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(f, "#vocabulary v1 n_docs={}", self.n_docs).map_err(|e| Error::io(path, e))?;
        let mut by_id: Vec<(&String, usize)> = self.term_to_id.iter().map(|(t, &i)| (t, i)).collect();
        by_id.sort_by_key(|&(_, i)| i);
        for (term, id) in by_id {
            writeln!(f, "{term}\t{}", self.document_frequency[id]).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(f).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty vocabulary file".into()))?
            .map_err(|e| Error::io(path, e))?;
        let n_docs = header
            .split_whitespace()
            .find_map(|s| s.strip_prefix("n_docs="))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Invalid("vocabulary header missing n_docs".into()))?;
        let mut term_to_id = BTreeMap::new();
        let mut document_frequency = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let (term, df) = line.split_once('\t').ok_or_else(|| Error::ParseLine {
                line: i + 2,
                message: "expected term<TAB>df".into(),
            })?;
            term_to_id.insert(term.to_string(), i);
            document_frequency.push(df.parse().map_err(|_| Error::ParseLine {
                line: i + 2,
                message: format!("bad df '{df}'"),
            })?);
        }
        Ok(Vocabulary {
            term_to_id,
            document_frequency,
            n_docs,
        })
    }
}

/// Fit a vocabulary over tokenized documents, dropping terms with document
/// frequency below `min_df`.
pub fn fit_vocabulary(docs: &[Vec<String>], min_df: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Invalid("cannot fit a vocabulary on zero documents".into()));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<&str> = doc.iter().map(|t| t.as_str()).collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let mut term_to_id = BTreeMap::new();
    let mut document_frequency = Vec::new();
    for (term, count) in df {
        if count >= min_df {
            term_to_id.insert(term.to_string(), document_frequency.len());
            document_frequency.push(count);
        }
    }
    if term_to_id.is_empty() {
        return Err(Error::Invalid(format!(
            "all terms filtered out at min_df={min_df}"
        )));
    }
    Ok(Vocabulary {
        term_to_id,
        document_frequency,
        n_docs: docs.len(),
    })
}

/// A sparse feature vector with sorted indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub dim: usize,
}

impl SparseVector {
    pub fn l2_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            out[i] = w;
        }
        out
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.weights)
            .map(|(&i, &w)| w * dense[i])
            .sum()
    }
}

/// Raw term counts over the vocabulary (the multinomial event model input).
pub fn count_transform(doc: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for token in doc {
        if let Some(id) = vocab.id(token) {
            *counts.entry(id).or_insert(0.0) += 1.0;
        }
    }
    let (indices, weights) = counts.into_iter().unzip();
    SparseVector {
        indices,
        weights,
        dim: vocab.len(),
    }
}

/// TF-IDF transform. The exact formula, stated bit-for-bit:
///
/// ```text
/// idf(t)    = ln((1 + n_docs) / (1 + df(t))) + 1
/// weight(t) = tf(t, doc) * idf(t)
/// ```
///
/// followed by L2 normalization of the whole vector. Unknown terms are
/// skipped.
pub fn tfidf_transform(doc: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut v = count_transform(doc, vocab);
    let n = vocab.n_docs as f64;
    for (k, &id) in v.indices.iter().enumerate() {
        let idf = ((1.0 + n) / (1.0 + vocab.df(id) as f64)).ln() + 1.0;
        v.weights[k] *= idf;
    }
    let norm = v.l2_norm();
    if norm > 0.0 {
        for w in &mut v.weights {
            *w /= norm;
        }
    }
    v
}

/// What to return for terms absent from an embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OovPolicy {
    Zeros,
    MeanVector,
}

/// A fixed-dimension pretrained embedding table.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    pub dim: usize,
    pub oov_policy: OovPolicy,
    mean: Vec<f64>,
}

impl EmbeddingTable {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.vectors.contains_key(term)
    }

    pub fn lookup(&self, term: &str) -> Vec<f64> {
        match self.vectors.get(term) {
            Some(v) => v.clone(),
            None => match self.oov_policy {
                OovPolicy::Zeros => vec![0.0; self.dim],
                OovPolicy::MeanVector => self.mean.clone(),
            },
        }
    }
}

/// Load a word2vec-style text file: `term v1 v2 ... vd` per line.
pub fn load_embeddings(path: &Path, expected_dim: usize) -> Result<EmbeddingTable> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut vectors = HashMap::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let term = parts.next().unwrap().to_string();
        let values: std::result::Result<Vec<f64>, _> = parts.map(str::parse).collect();
        let values = values.map_err(|e| Error::ParseLine {
            line: i + 1,
            message: format!("bad value: {e}"),
        })?;
        if values.len() != expected_dim {
            return Err(Error::ParseLine {
                line: i + 1,
                message: format!(
                    "expected {expected_dim} values, found {}",
                    values.len()
                ),
            });
        }
        vectors.insert(term, values);
    }
    if vectors.is_empty() {
        return Err(Error::Invalid(format!(
            "no parseable embedding rows in {}",
            path.display()
        )));
    }
    let mut mean = vec![0.0; expected_dim];
    for v in vectors.values() {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= vectors.len() as f64;
    }
    Ok(EmbeddingTable {
        vectors,
        dim: expected_dim,
        oov_policy: OovPolicy::Zeros,
        mean,
    })
}

/// Write an embedding table in the same text format (sorted by term, so the
/// output is deterministic).
pub fn save_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut terms: Vec<&String> = table.vectors.keys().collect();
    terms.sort();
    for term in terms {
        let row = table.vectors[term]
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(f, "{term} {row}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Deterministic pseudo-embedding table for a token set; handy for tests and
/// the GloVe-style fixtures used in demos.
pub fn hashed_embeddings(terms: &[String], dim: usize) -> EmbeddingTable {
    let mut vectors = HashMap::new();
    for term in terms {
        let v: Vec<f64> = (0..dim).map(|j| hash_unit(term.as_bytes(), j as u64)).collect();
        vectors.insert(term.clone(), v);
    }
    let mut mean = vec![0.0; dim];
    if !vectors.is_empty() {
        for v in vectors.values() {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= vectors.len() as f64;
        }
    }
    EmbeddingTable {
        vectors,
        dim,
        oov_policy: OovPolicy::Zeros,
        mean,
    }
}

/// Embed a token sequence into a `max_len x d` matrix with zero padding.
pub fn embed_sequence(tokens: &[String], table: &EmbeddingTable, max_len: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; table.dim]; max_len];
    for (i, token) in tokens.iter().take(max_len).enumerate() {
        out[i] = table.lookup(token);
    }
    out
}

/// Output of a contextual encoder: one vector per unpadded position plus a
/// pooled sentence vector.
#[derive(Debug, Clone)]
pub struct EncoderOutput {
    pub per_position: Vec<Vec<f64>>,
    pub pooled: Vec<f64>,
}

/// Contract for pluggable contextual encoders (the pretrained-transformer
/// role). Implementations must be deterministic in inference mode and
/// declare whether concurrent encode calls are permitted.
pub trait EncoderAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn hidden_dim(&self) -> usize;
    fn encode(&self, seq: &EncodedSequence) -> EncoderOutput;
    /// Whether gradient updates through the encoder are supported. The
    /// shipped adapters are frozen; training falls back to head-only.
    fn supports_finetuning(&self) -> bool {
        false
    }
    fn concurrent_encode_allowed(&self) -> bool {
        true
    }
}

fn hash_unit(bytes: &[u8], salt: u64) -> f64 {
    // splitmix64 over a simple byte fold; uniform in (-1, 1).
    let mut h = 0xcbf29ce484222325u64 ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = h.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    (z as f64 / u64::MAX as f64) * 2.0 - 1.0
}

/// Deterministic hash-projection encoder used for tests and head-only
/// training without a real pretrained model. Each token id maps to a fixed
/// pseudo-random vector; the pooled output is the mean over unpadded
/// positions.
pub struct HashProjectionAdapter {
    dim: usize,
}

impl HashProjectionAdapter {
    pub fn new(dim: usize) -> Self {
        HashProjectionAdapter { dim }
    }
}

impl EncoderAdapter for HashProjectionAdapter {
    fn name(&self) -> &str {
        "hash-projection"
    }

    fn hidden_dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, seq: &EncodedSequence) -> EncoderOutput {
        let mut per_position = Vec::new();
        for (&id, &m) in seq.ids.iter().zip(&seq.attention_mask) {
            if m == 0 || id == PAD_ID {
                continue;
            }
            let v: Vec<f64> = (0..self.dim)
                .map(|j| hash_unit(&id.to_le_bytes(), j as u64))
                .collect();
            per_position.push(v);
        }
        let n = per_position.len().max(1);
        let mut pooled = vec![0.0; self.dim];
        for v in &per_position {
            for (p, x) in pooled.iter_mut().zip(v) {
                *p += x;
            }
        }
        for p in &mut pooled {
            *p /= n as f64;
        }
        EncoderOutput {
            per_position,
            pooled,
        }
    }
}
