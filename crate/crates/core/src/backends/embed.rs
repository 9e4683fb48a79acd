//! Text embedders.
//!
//! The deterministic local embedder hashes tokens into a fixed number of
//! buckets and L2-normalizes the counts. It is not a semantic model; it
//! exists so every similarity-dependent behavior (retrieval ranking, the
//! consistency metric, information-gain scoring) reproduces offline.

use crate::error::{Error, Result};

/// Produces unit-norm vectors of a fixed dimension.
pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    /// Embeds non-empty text into a unit-norm vector.
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// Cosine similarity of two equal-length vectors. Returns 0.0 when either
/// vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Deterministic local embedder: whitespace/punctuation tokenization, seeded
/// FNV-1a hash of each token into one of `dimension` buckets, count
/// accumulation, L2 normalization.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
    seed: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x1000_0000_01b3;

impl HashEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Self {
        assert!(dimension > 0, "embedder dimension must be positive");
        Self { dimension, seed }
    }

    /// Default dimension used across the crate.
    pub const DEFAULT_DIMENSION: usize = 256;

    /// The bucket a single token hashes into.
    pub fn bucket(&self, token: &str) -> usize {
        let mut hash = FNV_OFFSET ^ self.seed;
        for byte in token.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(FNV_PRIME);
        }
        (hash % self.dimension as u64) as usize
    }

    fn tokens(text: &str) -> impl Iterator<Item = &str> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
    }
}

impl Embedder for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        if text.trim().is_empty() {
            return Err(Error::InvalidArgument(
                "cannot embed empty text".into(),
            ));
        }
        let mut counts = vec![0.0_f64; self.dimension];
        let mut seen = false;
        for token in Self::tokens(text) {
            counts[self.bucket(token)] += 1.0;
            seen = true;
        }
        if !seen {
            return Err(Error::InvalidArgument(
                "text contains no tokens".into(),
            ));
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        for c in &mut counts {
            *c /= norm;
        }
        Ok(counts)
    }
}
