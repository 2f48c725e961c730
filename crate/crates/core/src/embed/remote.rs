//! HTTP embedding client with batching, retries and a content-hash cache.
//!
//! Request body: `{"model": <name>, "input": [<text>, ...]}`.
//! Response body: `{"data": [{"embedding": [<f32>, ...]}, ...]}`, one entry
//! per input text, in input order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::RwLock;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{Embedder, EmbedderConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal POST transport, so tests can stand in for the network.
pub trait Transport: Send + Sync {
    /// `Err` means the request never produced a response (connection, DNS,
    /// timeout); it is treated as transient.
    fn post_json(&self, url: &str, bearer: &str, body: &serde_json::Value) -> std::result::Result<HttpResponse, String>;
}

pub type HttpTransport = UreqTransport;

#[derive(Debug, Clone)]
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        UreqTransport {
            agent: config.into(),
        }
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: &str, body: &serde_json::Value) -> std::result::Result<HttpResponse, String> {
        let mut resp = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {bearer}"))
            .send_json(body)
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Vectors keyed by (model name, SHA-256 of the text). Concurrent readers,
/// serialized writers; optionally persisted as a JSON file.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    entries: RwLock<HashMap<String, Vec<f32>>>,
    path: Option<PathBuf>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: &Path) -> Result<Self> {
        let entries = if path.exists() {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_reader(BufReader::new(f))?
        } else {
            HashMap::new()
        };
        Ok(EmbeddingCache {
            entries: RwLock::new(entries),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn key(model: &str, text: &str) -> String {
        let mut h = Sha256::new();
        h.update(model.as_bytes());
        h.update([0u8]);
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn get(&self, model: &str, text: &str) -> Option<Vec<f32>> {
        self.entries
            .read()
            .expect("cache lock")
            .get(&Self::key(model, text))
            .cloned()
    }

    pub fn insert(&self, model: &str, text: &str, v: Vec<f32>) {
        self.entries
            .write()
            .expect("cache lock")
            .insert(Self::key(model, text), v);
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Write to the backing file, if any. Keys are sorted so the file is
    /// reproducible.
    pub fn persist(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let entries = self.entries.read().expect("cache lock");
        let sorted: std::collections::BTreeMap<_, _> = entries.iter().collect();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(f), &sorted)?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct ResponseBody {
    data: Vec<ResponseItem>,
}

#[derive(Deserialize)]
struct ResponseItem {
    embedding: Vec<f32>,
}

pub struct RemoteEmbedder<T: Transport> {
    cfg: EmbedderConfig,
    api_key: String,
    transport: T,
    cache: EmbeddingCache,
}

impl<T: Transport> RemoteEmbedder<T> {
    /// Read the API key from `cfg.api_key_env`; fails before any request
    /// when it is unset.
    pub fn from_env(cfg: EmbedderConfig, transport: T, cache: EmbeddingCache) -> Result<Self> {
        let api_key = std::env::var(&cfg.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| Error::Config(format!("environment variable `{}` is not set", cfg.api_key_env)))?;
        Self::with_key(cfg, api_key, transport, cache)
    }

    pub fn with_key(cfg: EmbedderConfig, api_key: String, transport: T, cache: EmbeddingCache) -> Result<Self> {
        cfg.validate()?;
        Ok(RemoteEmbedder {
            cfg,
            api_key,
            transport,
            cache,
        })
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }

    fn fetch_batch(&self, batch: usize, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        let url = self.cfg.endpoint_url.as_deref().unwrap_or_default();
        let body = json!({ "model": self.cfg.model_name, "input": texts });
        let mut last = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                let wait = self.cfg.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.transport.post_json(url, &self.api_key, &body) {
                Ok(r) if (200..300).contains(&r.status) => {
                    let parsed: ResponseBody = serde_json::from_str(&r.body)
                        .map_err(|e| Error::Protocol(format!("batch {batch}: malformed response: {e}")))?;
                    if parsed.data.len() != texts.len() {
                        return Err(Error::Protocol(format!(
                            "batch {batch}: {} vectors for {} texts",
                            parsed.data.len(),
                            texts.len()
                        )));
                    }
                    return Ok(parsed.data.into_iter().map(|d| d.embedding).collect());
                }
                Ok(r) if r.status == 429 || r.status >= 500 => last = format!("HTTP {}", r.status),
                Ok(r) => {
                    return Err(Error::Transport {
                        batch,
                        message: format!("HTTP {}: {}", r.status, r.body.chars().take(200).collect::<String>()),
                    })
                }
                Err(e) => last = e,
            }
            log::warn!("embedding batch {batch} attempt {} failed: {last}", attempt + 1);
        }
        Err(Error::Transport {
            batch,
            message: format!("gave up after {} attempts: {last}", self.cfg.max_retries + 1),
        })
    }
}

impl<T: Transport> Embedder for RemoteEmbedder<T> {
    fn label(&self) -> String {
        self.cfg.model_name.clone()
    }

    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        let model = &self.cfg.model_name;
        let mut out: Vec<Option<Vec<f32>>> = texts.iter().map(|t| self.cache.get(model, t)).collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        let batches: Vec<&[usize]> = missing.chunks(self.cfg.batch_size).collect();

        let in_flight = self.cfg.max_in_flight.max(1);
        for (group_no, group) in batches.chunks(in_flight).enumerate() {
            let results: Vec<Result<Vec<Vec<f32>>>> = std::thread::scope(|s| {
                let handles: Vec<_> = group
                    .iter()
                    .enumerate()
                    .map(|(k, idx)| {
                        let batch_no = group_no * in_flight + k;
                        let batch_texts: Vec<&str> = idx.iter().map(|&i| texts[i]).collect();
                        s.spawn(move || self.fetch_batch(batch_no, &batch_texts))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("embedding worker panicked"))
                    .collect()
            });
            for (idx, res) in group.iter().zip(results) {
                for (&i, v) in idx.iter().zip(res?) {
                    self.cache.insert(model, texts[i], v.clone());
                    out[i] = Some(v);
                }
            }
        }

        let out: Vec<Vec<f32>> = out.into_iter().map(|v| v.expect("every text resolved")).collect();
        if let Some(first) = out.first() {
            if out.iter().any(|v| v.len() != first.len()) {
                return Err(Error::Protocol("embedding dimension differs across batches".into()));
            }
        }
        self.cache.persist()?;
        Ok(out)
    }
}
