//! Deterministic text-to-vector embedding, normalized adjacency construction,
//! cosine similarity, and Laplacian positional encodings for the fixed-shape
//! sequence template.
//!
//! The embedder hashes codepoint n-grams, not rendered glyphs: two texts that
//! display identically but differ in codepoints embed differently, which is
//! exactly the surface the imperceptible text attacks exploit.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::TextAttributedGraph;
use crate::linalg::{jacobi_eigh, Csr};
use crate::rng::fnv1a64;

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("positional encoding dim {dim} too large for {positions} tree positions")]
    PeDimTooLarge { dim: usize, positions: usize },
}

/// Featurizer parameters; the digest of this struct is embedded in victim
/// parameter files so stale features are refused at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    /// Embedding width (hash bucket count).
    pub dim: usize,
    /// Codepoint n-gram length.
    pub ngram: usize,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        // Desk-scale default: wide enough to separate the benchmark classes,
        // small enough that the meta-gradient attack stays tractable.
        FeaturizerConfig { dim: 128, ngram: 3 }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dim < 16 {
            return Err(format!("embedding dim must be >= 16, got {}", self.dim));
        }
        if self.ngram < 2 {
            return Err(format!("ngram length must be >= 2, got {}", self.ngram));
        }
        Ok(())
    }

    /// Hex digest used to tie serialized victim parameters to the featurizer.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("config serializes"));
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn gram_bucket(gram: &[char], dim: usize) -> u32 {
    let mut bytes = Vec::with_capacity(4 + gram.len() * 4);
    bytes.extend_from_slice(b"emb\0");
    for &c in gram {
        bytes.extend_from_slice(&(c as u32).to_le_bytes());
    }
    (fnv1a64(&bytes) % dim as u64) as u32
}

/// Ordered stream of n-gram bucket ids for a text. This is the default
/// black-box "model output" the text attack maximizes Levenshtein distance
/// over. Texts shorter than `n` contribute a single whole-text gram.
pub fn ngram_stream(text: &str, cfg: &FeaturizerConfig) -> Vec<u32> {
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() < cfg.ngram {
        return vec![gram_bucket(&chars, cfg.dim)];
    }
    chars.windows(cfg.ngram).map(|w| gram_bucket(w, cfg.dim)).collect()
}

/// Hash-embed one text: n-gram counts bucketed into `dim` slots, then
/// L2-normalized. Empty strings embed to the zero vector.
pub fn hash_embed(text: &str, cfg: &FeaturizerConfig) -> Vec<f64> {
    let mut v = vec![0.0; cfg.dim];
    for bucket in ngram_stream(text, cfg) {
        v[bucket as usize] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

/// Dense per-node embedding matrix, row i = embedding of node i's text.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    /// Nodes whose text embedded to the zero vector (empty texts).
    pub zero_rows: Vec<usize>,
    pub config: FeaturizerConfig,
}

impl FeatureMatrix {
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, u: usize) -> ndarray::ArrayView1<'_, f64> {
        self.values.row(u)
    }
}

/// Embed every node text. Rows are independent, so the fan-out order cannot
/// change the result.
pub fn embed_all(graph: &TextAttributedGraph, cfg: &FeaturizerConfig) -> FeatureMatrix {
    let n = graph.node_count();
    let rows: Vec<Vec<f64>> =
        (0..n).into_par_iter().map(|u| hash_embed(graph.text(u), cfg)).collect();
    let mut values = Array2::<f64>::zeros((n, cfg.dim));
    let mut zero_rows = Vec::new();
    for (u, row) in rows.into_iter().enumerate() {
        if row.iter().all(|&x| x == 0.0) {
            zero_rows.push(u);
        }
        for (j, x) in row.into_iter().enumerate() {
            values[[u, j]] = x;
        }
    }
    FeatureMatrix { values, zero_rows, config: *cfg }
}

/// Â = D̃^{-1/2} (A + I) D̃^{-1/2} with D̃ the degree matrix of A + I.
pub fn normalized_adjacency(graph: &TextAttributedGraph) -> Csr {
    let n = graph.node_count();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|u| {
            let du = (graph.degree(u) + 1) as f64;
            let mut row: Vec<(usize, f64)> = graph
                .neighbors(u)
                .iter()
                .map(|&v| {
                    let dv = (graph.degree(v) + 1) as f64;
                    (v, 1.0 / (du * dv).sqrt())
                })
                .collect();
            let self_pos = row.partition_point(|&(j, _)| j < u);
            row.insert(self_pos, (u, 1.0 / du));
            row
        })
        .collect();
    Csr::from_rows(rows)
}

/// Cosine similarity; zero-vector inputs yield 0 by definition.
pub fn try_cosine(a: &[f64], b: &[f64]) -> Result<f64, FeaturizeError> {
    if a.len() != b.len() {
        return Err(FeaturizeError::DimensionMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    try_cosine(a, b).expect("cosine dimension mismatch")
}

/// Number of slots in the fixed-shape (d, k) template tree.
pub fn tree_positions(depth: usize, fanout: usize) -> usize {
    let mut total = 1usize;
    let mut level = 1usize;
    for _ in 0..depth {
        level *= fanout;
        total += level;
    }
    total
}

/// Laplacian positional encodings for the fixed-shape (d, k) template tree.
///
/// Rows are tree positions in level order; columns are eigenvectors of the
/// tree's normalized Laplacian, smallest nonzero eigenvalue first, each
/// sign-fixed so its first nonzero coordinate is positive. The tree shape is
/// the same for every target node, so this matrix is computed once.
pub fn laplacian_pe(depth: usize, fanout: usize, dim: usize) -> Result<Array2<f64>, FeaturizeError> {
    let p = tree_positions(depth, fanout);
    if dim + 1 > p {
        return Err(FeaturizeError::PeDimTooLarge { dim, positions: p });
    }
    // Complete k-ary tree in heap layout: children of i are k*i+1 ..= k*i+k.
    let mut adj = Array2::<f64>::zeros((p, p));
    let mut deg = Array1::<f64>::zeros(p);
    for i in 0..p {
        for c in 0..fanout {
            let j = fanout * i + 1 + c;
            if j < p {
                adj[[i, j]] = 1.0;
                adj[[j, i]] = 1.0;
                deg[i] += 1.0;
                deg[j] += 1.0;
            }
        }
    }
    let mut lap = Array2::<f64>::eye(p);
    for i in 0..p {
        for j in 0..p {
            if adj[[i, j]] > 0.0 {
                lap[[i, j]] -= 1.0 / (deg[i] * deg[j]).sqrt();
            }
        }
    }
    let (vals, vecs) = jacobi_eigh(&lap);
    let mut cols: Vec<usize> = (0..p).filter(|&i| vals[i] > 1e-9).collect();
    cols.truncate(dim);
    debug_assert_eq!(cols.len(), dim, "connected tree has exactly one zero mode");
    let mut pe = Array2::<f64>::zeros((p, dim));
    for (out_c, &in_c) in cols.iter().enumerate() {
        let col = vecs.column(in_c);
        let sign = col.iter().find(|x| x.abs() > 1e-9).map_or(1.0, |&x| x.signum());
        for r in 0..p {
            pe[[r, out_c]] = col[r] * sign;
        }
    }
    Ok(pe)
}
