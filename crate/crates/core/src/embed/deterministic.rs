use sha2::{Digest, Sha256};

use super::Embedder;
use crate::error::{Error, Result};

/// Offline embedder: signed feature hashing of word unigrams and bigrams,
/// then L2 normalization. It carries no semantics beyond shared vocabulary.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    seed: u64,
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(seed: u64, dim: usize) -> Result<Self> {
        if dim < 8 {
            return Err(Error::Config(format!("hashing embedder needs dim >= 8 (got {dim})")));
        }
        Ok(HashingEmbedder { seed, dim })
    }

    fn bucket(&self, feature: &str) -> (usize, f64) {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(feature.as_bytes());
        let d = h.finalize();
        let idx = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
        let sign = if d[8] & 1 == 0 { 1.0 } else { -1.0 };
        ((idx % self.dim as u64) as usize, sign)
    }

    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let tokens: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect();
        let mut acc = vec![0.0f64; self.dim];
        let bigrams = tokens.windows(2).map(|w| format!("{} {}", w[0], w[1]));
        for feature in tokens.iter().cloned().chain(bigrams) {
            let (i, s) = self.bucket(&feature);
            acc[i] += s;
        }
        if acc.iter().all(|&v| v == 0.0) {
            // Empty or fully cancelled input still maps to a unit vector.
            let (i, s) = self.bucket("\u{0}empty");
            acc[i] = s;
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        acc.iter().map(|v| (v / norm) as f32).collect()
    }
}

impl Embedder for HashingEmbedder {
    fn label(&self) -> String {
        format!("hashing-d{}-s{}", self.dim, self.seed)
    }

    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}
