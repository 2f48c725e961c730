use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{CleanConfig, RatingColumns, SegmenterConfig};
use crate::diagdist::DiagramDistanceConfig;
use crate::embed::EmbedderConfig;
use crate::error::{Error, Result};
use crate::gam::GamConfig;
use crate::topics::{ClusterConfig, ReductionConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub novel: PathBuf,
    pub ratings: PathBuf,
    pub ratings_columns: RatingColumns,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomologyConfig {
    pub max_dim: usize,
}

impl Default for HomologyConfig {
    fn default() -> Self {
        HomologyConfig { max_dim: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub winsor_lo: f64,
    pub winsor_hi: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            winsor_lo: 2.5,
            winsor_hi: 97.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub basis_dim: usize,
    pub permutations: usize,
    pub smoothing: GamConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            basis_dim: 4,
            permutations: 1000,
            smoothing: GamConfig::default(),
        }
    }
}

/// Per-cell override applied to one (window, overlap) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellOverride {
    pub window_size: usize,
    pub overlap: usize,
    pub min_cluster_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub embedders: Vec<EmbedderConfig>,
    /// (window_size, overlap) pairs.
    pub windows: Vec<(usize, usize)>,
    pub overrides: Vec<CellOverride>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            embedders: Vec::new(),
            windows: vec![(5, 2), (3, 1), (7, 3), (10, 5)],
            overrides: vec![CellOverride {
                window_size: 3,
                overlap: 1,
                min_cluster_size: 4,
            }],
        }
    }
}

impl SweepGrid {
    /// Cells in grid order: embedders outermost, then windows.
    pub fn cells(&self, base: &PipelineConfig) -> Result<Vec<SweepCell>> {
        let embedders = if self.embedders.is_empty() {
            vec![base.embedder.clone()]
        } else {
            self.embedders.clone()
        };
        if self.windows.is_empty() {
            return Err(Error::Config("sweep grid has no (window, overlap) pairs".into()));
        }
        let mut out = Vec::new();
        for e in &embedders {
            for &(w, o) in &self.windows {
                let mut cfg = base.clone();
                cfg.sweep = SweepGrid::default();
                cfg.embedder = e.clone();
                cfg.segmenter = SegmenterConfig {
                    window_size: w,
                    overlap: o,
                    ..base.segmenter
                };
                if let Some(ov) = self.overrides.iter().find(|ov| ov.window_size == w && ov.overlap == o) {
                    cfg.cluster.min_cluster_size = ov.min_cluster_size;
                }
                let name = format!("{}_w{w}o{o}", sanitize(&e.label()));
                cfg.out_dir = base.out_dir.join("sweep").join(&name);
                out.push(SweepCell {
                    name,
                    embedder: e.label(),
                    window_size: w,
                    overlap: o,
                    config: cfg,
                });
            }
        }
        Ok(out)
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '-' })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub name: String,
    pub embedder: String,
    pub window_size: usize,
    pub overlap: usize,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub input: InputConfig,
    pub clean: CleanConfig,
    pub segmenter: SegmenterConfig,
    pub embedder: EmbedderConfig,
    pub reduction: ReductionConfig,
    pub cluster: ClusterConfig,
    pub homology: HomologyConfig,
    pub distance: DiagramDistanceConfig,
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub sweep: SweepGrid,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            workers: 0,
            input: InputConfig::default(),
            clean: CleanConfig::default(),
            segmenter: SegmenterConfig::default(),
            embedder: EmbedderConfig::default(),
            reduction: ReductionConfig::default(),
            cluster: ClusterConfig::default(),
            homology: HomologyConfig::default(),
            distance: DiagramDistanceConfig::default(),
            features: FeatureConfig::default(),
            model: ModelConfig::default(),
            sweep: SweepGrid::default(),
        }
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn hash_json<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("config serializes"))
}

impl PipelineConfig {
    /// Parse TOML; relative paths are taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text)?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input.novel);
        fix(&mut self.input.ratings);
        fix(&mut self.out_dir);
        if let Some(p) = self.embedder.cache_path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.reduction.external_path.as_mut() {
            fix(p);
        }
        for e in &mut self.sweep.embedders {
            if let Some(p) = e.cache_path.as_mut() {
                fix(p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, p) in [("input.novel", &self.input.novel), ("input.ratings", &self.input.ratings)] {
            if !p.is_file() {
                return Err(Error::Config(format!("{what}: {} does not exist", p.display())));
            }
        }
        if let Some(p) = &self.reduction.external_path {
            if !p.is_file() {
                return Err(Error::Config(format!("reduction.external_path: {} does not exist", p.display())));
            }
        }
        self.segmenter.validate()?;
        self.embedder.validate()?;
        self.reduction.validate()?;
        self.cluster.validate()?;
        self.distance.validate()?;
        self.model.smoothing.validate()?;
        if self.homology.max_dim > 2 {
            return Err(Error::Config("homology.max_dim must be 0, 1 or 2".into()));
        }
        let f = &self.features;
        if !(0.0..100.0).contains(&f.winsor_lo) || !(f.winsor_lo < f.winsor_hi && f.winsor_hi <= 100.0) {
            return Err(Error::Config("features: need 0 <= winsor_lo < winsor_hi <= 100".into()));
        }
        if self.model.basis_dim < 3 {
            return Err(Error::Config("model.basis_dim must be >= 3".into()));
        }
        if self.model.permutations < crate::gam::MIN_PERMUTATIONS {
            return Err(Error::Config(format!(
                "model.permutations must be >= {}",
                crate::gam::MIN_PERMUTATIONS
            )));
        }
        for e in &self.sweep.embedders {
            e.validate()?;
        }
        for &(w, o) in &self.sweep.windows {
            SegmenterConfig::new(w, o)?;
        }
        Ok(())
    }

    /// Hash of every field that can change a result. Output location,
    /// worker count, input locations (their contents are hashed per stage)
    /// and cache locations are excluded.
    pub fn config_hash(&self) -> String {
        hash_json(&self.semantic())
    }

    pub(crate) fn semantic(&self) -> PipelineConfig {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.workers = 0;
        c.input.novel = PathBuf::new();
        c.input.ratings = PathBuf::new();
        c.embedder.cache_path = None;
        c.reduction.external_path = None;
        for e in &mut c.sweep.embedders {
            e.cache_path = None;
        }
        c
    }
}
