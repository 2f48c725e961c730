//! Segment embeddings: the matrix type shared by every vector space in the
//! pipeline, the embedder backends, and the on-disk vector store.

mod deterministic;
mod remote;
mod store;

pub use deterministic::HashingEmbedder;
pub use remote::{EmbeddingCache, HttpResponse, HttpTransport, RemoteEmbedder, Transport, UreqTransport};
pub use store::{load_store, read_store, save_store, write_store, STORE_MAGIC, STORE_VERSION};

use serde::{Deserialize, Serialize};

use crate::corpus::TextSegment;
use crate::error::{Error, Result};

/// Dense row-major matrix whose rows are keyed by segment or topic ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    row_ids: Vec<u64>,
    dim: usize,
    values: Vec<f32>,
    space_tag: String,
}

impl EmbeddingMatrix {
    pub fn new(row_ids: Vec<u64>, dim: usize, values: Vec<f32>, space_tag: impl Into<String>) -> Result<Self> {
        if values.len() != row_ids.len() * dim {
            return Err(Error::Domain(format!(
                "matrix has {} values, expected {} rows x {dim}",
                values.len(),
                row_ids.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry in row {}", pos / dim.max(1))));
        }
        let mut sorted = row_ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate row id".into()));
        }
        Ok(EmbeddingMatrix {
            row_ids,
            dim,
            values,
            space_tag: space_tag.into(),
        })
    }

    pub fn from_rows(row_ids: Vec<u64>, rows: &[Vec<f64>], space_tag: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Domain("ragged rows".into()));
        }
        let values = rows.iter().flatten().map(|&v| v as f32).collect();
        Self::new(row_ids, dim, values, space_tag)
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn space_tag(&self) -> &str {
        &self.space_tag
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows())
            .map(|i| self.row(i).iter().map(|&v| v as f64).collect())
            .collect()
    }

    /// Position of a row id.
    pub fn position(&self, id: u64) -> Option<usize> {
        self.row_ids.iter().position(|&r| r == id)
    }
}

/// Cosine of the angle between two vectors, clamped to [-1, 1].
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Domain(format!("dimension mismatch {} vs {}", u.len(), v.len())));
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine similarity of a zero vector".into()));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    Remote,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub endpoint_url: Option<String>,
    pub model_name: String,
    pub api_key_env: String,
    pub batch_size: usize,
    pub seed: u64,
    pub dim: usize,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    /// Vector cache file for the remote backend.
    pub cache_path: Option<std::path::PathBuf>,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig {
            kind: EmbedderKind::Deterministic,
            endpoint_url: None,
            model_name: "hashing-ngram".into(),
            api_key_env: "EMBEDDING_API_KEY".into(),
            batch_size: 128,
            seed: 0,
            dim: 1024,
            max_retries: 4,
            backoff_ms: 500,
            max_in_flight: 4,
            cache_path: None,
        }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            EmbedderKind::Remote => {
                if self.endpoint_url.as_deref().is_none_or(str::is_empty) || self.model_name.is_empty() {
                    return Err(Error::Config("remote embedder needs endpoint_url and model_name".into()));
                }
                if self.batch_size == 0 {
                    return Err(Error::Config("batch_size must be positive".into()));
                }
            }
            EmbedderKind::Deterministic => {
                if self.dim < 8 {
                    return Err(Error::Config(format!("deterministic embedder needs dim >= 8 (got {})", self.dim)));
                }
            }
        }
        Ok(())
    }

    /// Label written into the matrix's space tag.
    pub fn label(&self) -> String {
        match self.kind {
            EmbedderKind::Remote => self.model_name.clone(),
            EmbedderKind::Deterministic => format!("hashing-d{}-s{}", self.dim, self.seed),
        }
    }
}

/// Anything that turns a batch of texts into one vector per text, in order.
pub trait Embedder {
    fn label(&self) -> String;
    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>>;
}

/// Embed segments in order; row ids are the segment ids.
pub fn embed_segments(segments: &[TextSegment], embedder: &dyn Embedder) -> Result<EmbeddingMatrix> {
    let texts: Vec<&str> = segments.iter().map(|s| s.text.as_str()).collect();
    let vectors = embedder.embed_texts(&texts)?;
    if vectors.len() != segments.len() {
        return Err(Error::Protocol(format!(
            "embedder returned {} vectors for {} segments",
            vectors.len(),
            segments.len()
        )));
    }
    let dim = vectors.first().map_or(0, Vec::len);
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Protocol("embedding dimension differs between rows".into()));
    }
    EmbeddingMatrix::new(
        segments.iter().map(|s| s.segment_id as u64).collect(),
        dim,
        vectors.into_iter().flatten().collect(),
        embedder.label(),
    )
}

/// Build the backend described by `cfg`.
pub fn embedder_from_config(cfg: &EmbedderConfig) -> Result<Box<dyn Embedder + Send + Sync>> {
    cfg.validate()?;
    Ok(match cfg.kind {
        EmbedderKind::Deterministic => Box::new(HashingEmbedder::new(cfg.seed, cfg.dim)?),
        EmbedderKind::Remote => {
            let cache = match &cfg.cache_path {
                Some(p) => EmbeddingCache::open(p)?,
                None => EmbeddingCache::in_memory(),
            };
            Box::new(RemoteEmbedder::from_env(cfg.clone(), UreqTransport::default(), cache)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[1.0, 1.0], &[2.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn matrix_rejects_bad_input() {
        assert!(EmbeddingMatrix::new(vec![0, 1], 2, vec![0.0; 3], "x").is_err());
        assert!(EmbeddingMatrix::new(vec![0, 0], 1, vec![0.0; 2], "x").is_err());
        assert!(EmbeddingMatrix::new(vec![0], 1, vec![f32::NAN], "x").is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = EmbedderConfig {
            kind: EmbedderKind::Remote,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.endpoint_url = Some("http://localhost:1/embed".into());
        assert!(cfg.validate().is_ok());
        let det = EmbedderConfig {
            dim: 4,
            ..Default::default()
        };
        assert!(det.validate().is_err());
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            u in prop::collection::vec(-10.0f32..10.0, 4),
            v in prop::collection::vec(-10.0f32..10.0, 4),
            a in 0.1f32..10.0, b in 0.1f32..10.0,
        ) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
            let c = cosine_similarity(&u, &v).unwrap();
            prop_assert!((c - cosine_similarity(&v, &u).unwrap()).abs() < 1e-12);
            let su: Vec<f32> = u.iter().map(|x| x * a).collect();
            let sv: Vec<f32> = v.iter().map(|x| x * b).collect();
            prop_assert!((c - cosine_similarity(&su, &sv).unwrap()).abs() < 1e-5);
            prop_assert!((-1.0..=1.0).contains(&c));
        }
    }
}
