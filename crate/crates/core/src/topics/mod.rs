//! Topic discovery: dimensionality reduction, density clustering of segment
//! embeddings, probability-weighted centroids and per-chapter statistics.

mod hdbscan;
mod pca;

pub use hdbscan::{core_distances, hdbscan, Clustering};
pub use pca::{reduce_pca, PcaProjection};

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::TextSegment;
use crate::embed::{load_store, EmbeddingMatrix};
use crate::error::{Error, Result};

pub type TopicId = u32;

/// One text chunk in narrative order with its topic (or `None` for noise).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkTopic {
    pub segment_id: usize,
    pub chapter_index: usize,
    pub topic: Option<TopicId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMethod {
    #[default]
    Pca,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionConfig {
    pub method: ReductionMethod,
    pub target_dim: usize,
    pub external_path: Option<PathBuf>,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            method: ReductionMethod::Pca,
            target_dim: 32,
            external_path: None,
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_dim < 2 {
            return Err(Error::Config(format!("target_dim must be >= 2 (got {})", self.target_dim)));
        }
        if self.method == ReductionMethod::External && self.external_path.is_none() {
            return Err(Error::Config("external reduction needs external_path".into()));
        }
        Ok(())
    }
}

/// Reduce with PCA or load a precomputed reduction whose rows must match.
pub fn reduce(matrix: &EmbeddingMatrix, cfg: &ReductionConfig) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    match cfg.method {
        ReductionMethod::Pca => {
            if cfg.target_dim >= matrix.dim() {
                return Err(Error::Config(format!(
                    "target_dim {} must be below the embedding dimension {}",
                    cfg.target_dim,
                    matrix.dim()
                )));
            }
            Ok(reduce_pca(matrix, cfg.target_dim)?.reduced)
        }
        ReductionMethod::External => {
            let path = cfg.external_path.as_deref().expect("validated");
            let ext = load_store(path)?;
            if ext.row_ids() != matrix.row_ids() {
                return Err(Error::Structure(format!("{}: row ids differ from the embeddings", path.display())));
            }
            Ok(ext)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size`.
    pub min_samples: Option<usize>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            min_cluster_size: 3,
            min_samples: None,
        }
    }
}

impl ClusterConfig {
    pub fn new(min_cluster_size: usize) -> Self {
        ClusterConfig {
            min_cluster_size,
            min_samples: None,
        }
    }

    pub fn min_samples(&self) -> usize {
        self.min_samples.unwrap_or(self.min_cluster_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_cluster_size < 2 {
            return Err(Error::Config(format!("min_cluster_size must be >= 2 (got {})", self.min_cluster_size)));
        }
        if self.min_samples == Some(0) {
            return Err(Error::Config("min_samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// Topic assignment of every segment plus topic centroids in the original
/// embedding space (row id = topic id).
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub segment_ids: Vec<u64>,
    pub assignment: Vec<Option<TopicId>>,
    pub probability: Vec<f64>,
    pub centroids: EmbeddingMatrix,
}

impl TopicModel {
    /// Cluster the reduced rows and attach centroids from `original`.
    pub fn fit(reduced: &EmbeddingMatrix, original: &EmbeddingMatrix, cfg: &ClusterConfig) -> Result<Self> {
        let clustering = hdbscan(&reduced.rows_f64(), cfg)?;
        let segment_ids = reduced.row_ids().to_vec();
        let centroids = topic_centroids(&segment_ids, &clustering.labels, &clustering.probabilities, original)?;
        Ok(TopicModel {
            segment_ids,
            assignment: clustering.labels,
            probability: clustering.probabilities,
            centroids,
        })
    }

    pub fn topic_ids(&self) -> Vec<TopicId> {
        self.centroids.row_ids().iter().map(|&t| t as TopicId).collect()
    }

    pub fn n_topics(&self) -> usize {
        self.centroids.n_rows()
    }

    pub fn n_noise(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_none()).count()
    }

    /// Chunk sequence in segment order.
    pub fn chunk_topics(&self, segments: &[TextSegment]) -> Result<Vec<ChunkTopic>> {
        let by_id: BTreeMap<u64, Option<TopicId>> =
            self.segment_ids.iter().copied().zip(self.assignment.iter().copied()).collect();
        let mut out: Vec<ChunkTopic> = segments
            .iter()
            .map(|s| {
                by_id
                    .get(&(s.segment_id as u64))
                    .map(|&topic| ChunkTopic {
                        segment_id: s.segment_id,
                        chapter_index: s.chapter_index,
                        topic,
                    })
                    .ok_or_else(|| Error::Structure(format!("segment {} has no topic assignment", s.segment_id)))
            })
            .collect::<Result<_>>()?;
        out.sort_by_key(|c| c.segment_id);
        Ok(out)
    }
}

/// Probability-weighted mean of each topic's member rows in `original`.
pub fn topic_centroids(
    segment_ids: &[u64],
    labels: &[Option<TopicId>],
    probabilities: &[f64],
    original: &EmbeddingMatrix,
) -> Result<EmbeddingMatrix> {
    if segment_ids.len() != labels.len() || labels.len() != probabilities.len() {
        return Err(Error::Domain("assignment columns differ in length".into()));
    }
    let dim = original.dim();
    let position: BTreeMap<u64, usize> = original.row_ids().iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut members: BTreeMap<TopicId, Vec<(usize, f64)>> = BTreeMap::new();
    for ((&id, &label), &p) in segment_ids.iter().zip(labels).zip(probabilities) {
        if let Some(t) = label {
            let row = *position
                .get(&id)
                .ok_or_else(|| Error::Structure(format!("segment {id} missing from the embedding matrix")))?;
            members.entry(t).or_default().push((row, p));
        }
    }
    let mut ids = Vec::with_capacity(members.len());
    let mut rows = Vec::with_capacity(members.len());
    for (t, m) in members {
        let total: f64 = m.iter().map(|x| x.1).sum();
        let uniform = !(total > 0.0);
        if uniform {
            log::warn!("topic {t} has zero total membership probability; using the plain mean");
        }
        let mut c = vec![0.0f64; dim];
        for &(row, p) in &m {
            let w = if uniform { 1.0 } else { p };
            for (acc, &x) in c.iter_mut().zip(original.row(row)) {
                *acc += w * x as f64;
            }
        }
        let denom = if uniform { m.len() as f64 } else { total };
        c.iter_mut().for_each(|v| *v /= denom);
        ids.push(t as u64);
        rows.push(c);
    }
    if rows.is_empty() {
        return EmbeddingMatrix::new(Vec::new(), dim, Vec::new(), "centroids");
    }
    EmbeddingMatrix::from_rows(ids, &rows, "centroids")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterTopicStats {
    pub chapter_index: usize,
    pub topics_present: BTreeSet<TopicId>,
    pub n_topics: usize,
    pub n_novel: usize,
    /// Base-2 log of each present topic's chunk count in the chapter.
    pub freq_log2: BTreeMap<TopicId, f64>,
}

/// Per-chapter presence, novelty and frequency; noise chunks are skipped.
pub fn chapter_topic_stats(chunks: &[ChunkTopic]) -> Vec<ChapterTopicStats> {
    let mut counts: BTreeMap<usize, BTreeMap<TopicId, usize>> = BTreeMap::new();
    for c in chunks {
        let entry = counts.entry(c.chapter_index).or_default();
        if let Some(t) = c.topic {
            *entry.entry(t).or_default() += 1;
        }
    }
    let mut seen = BTreeSet::new();
    counts
        .into_iter()
        .map(|(chapter_index, freq)| {
            let topics_present: BTreeSet<TopicId> = freq.keys().copied().collect();
            let n_novel = topics_present.iter().filter(|t| seen.insert(**t)).count();
            ChapterTopicStats {
                chapter_index,
                n_topics: topics_present.len(),
                topics_present,
                n_novel,
                freq_log2: freq.into_iter().map(|(t, n)| (t, (n as f64).log2())).collect(),
            }
        })
        .collect()
}

/// `segment_id,topic_id,probability`; noise is written as topic `-1`.
pub fn write_assignments<W: Write>(model: &TopicModel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["segment_id", "topic_id", "probability"])?;
    for ((id, t), p) in model.segment_ids.iter().zip(&model.assignment).zip(&model.probability) {
        let topic = t.map_or("-1".to_string(), |t| t.to_string());
        w.write_record([id.to_string(), topic, p.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<assignments>", e))?;
    Ok(())
}

/// Parsed assignment table rows.
pub fn read_assignments<R: Read>(input: R) -> Result<Vec<(u64, Option<TopicId>, f64)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Structure("assignment row too short".into()));
        let id: u64 = field(0)?.parse().map_err(|_| Error::Structure("bad segment_id".into()))?;
        let topic: i64 = field(1)?.parse().map_err(|_| Error::Structure("bad topic_id".into()))?;
        let p: f64 = field(2)?.parse().map_err(|_| Error::Structure("bad probability".into()))?;
        out.push((id, u32::try_from(topic).ok(), p));
    }
    Ok(out)
}

pub fn save_assignments(model: &TopicModel, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_assignments(model, std::io::BufWriter::new(f))
}
