//! Config-driven orchestration of the full analysis with a manifest of
//! per-stage input and output hashes, so unchanged stages are skipped.

mod config;
pub mod figures;
mod report;
mod stages;
mod sweep;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{
    CellOverride, FeatureConfig, HomologyConfig, InputConfig, ModelConfig, PipelineConfig, SweepCell, SweepGrid,
};
pub use report::{regenerate_figures, FIGURES};
pub use stages::{fit_models, FitSummary, TopicsSummary, CONTROLS};
pub use sweep::{run_sweep, SweepRow, SWEEP_TABLE};

use crate::error::{Error, Result};
use config::{hash_json, sha256_hex};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Segment,
    Embed,
    Reduce,
    Cluster,
    Network,
    Homology,
    Distances,
    Features,
    Fit,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Segment,
        Stage::Embed,
        Stage::Reduce,
        Stage::Cluster,
        Stage::Network,
        Stage::Homology,
        Stage::Distances,
        Stage::Features,
        Stage::Fit,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Segment => "segment",
            Stage::Embed => "embed",
            Stage::Reduce => "reduce",
            Stage::Cluster => "cluster",
            Stage::Network => "network",
            Stage::Homology => "homology",
            Stage::Distances => "distances",
            Stage::Features => "features",
            Stage::Fit => "fit",
            Stage::Report => "report",
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(out_dir: &Path) -> Option<Manifest> {
        let text = std::fs::read_to_string(out_dir.join(MANIFEST)).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn save(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Which stages ran and which were satisfied by existing artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub ran: Vec<Stage>,
    pub skipped: Vec<Stage>,
}

pub(crate) fn hash_file(path: &Path) -> Option<String> {
    std::fs::read(path).ok().map(|b| sha256_hex(&b))
}

/// Artifact directory access for the stages.
pub(crate) struct Ctx<'a> {
    pub cfg: &'a PipelineConfig,
    pub out: &'a Path,
}

impl Ctx<'_> {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn read(&self, name: &str) -> Result<String> {
        let p = self.path(name);
        std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&p, bytes).map_err(|e| Error::io(p, e))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.write(name, serde_json::to_string_pretty(value)? + "\n")
    }
}

/// Run every stage through `last`, skipping stages whose recorded inputs,
/// outputs and configuration are unchanged and whose upstream stages did not
/// run in this invocation.
pub fn run_until(cfg: &PipelineConfig, last: Stage) -> Result<RunSummary> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| run_stages(cfg, last))
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    run_until(cfg, Stage::Report)
}

fn run_stages(cfg: &PipelineConfig, last: Stage) -> Result<RunSummary> {
    let out = cfg.out_dir.as_path();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let previous = Manifest::load(out).unwrap_or_default();
    let mut manifest = Manifest {
        tool_version: TOOL_VERSION.to_string(),
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        stages: previous.stages.clone(),
    };
    let ctx = Ctx { cfg, out };
    let mut summary = RunSummary {
        out_dir: out.to_path_buf(),
        ran: Vec::new(),
        skipped: Vec::new(),
    };
    for stage in Stage::ALL.into_iter().take_while(|s| *s <= last) {
        let config_hash = hash_json(&(TOOL_VERSION, stages::stage_config(stage, cfg)));
        let inputs: BTreeMap<String, String> = stages::stage_inputs(stage, cfg)
            .into_iter()
            .map(|(key, path)| {
                let h = hash_file(&path).ok_or_else(|| Error::Stage {
                    stage: stage.name(),
                    source: Box::new(Error::Structure(format!("missing input {}", path.display()))),
                })?;
                Ok((key, h))
            })
            .collect::<Result<_>>()?;
        let fresh = summary.ran.is_empty()
            && previous.stages.get(stage.name()).is_some_and(|rec| {
                rec.config_hash == config_hash
                    && rec.inputs == inputs
                    && !rec.outputs.is_empty()
                    && rec
                        .outputs
                        .iter()
                        .all(|(name, h)| hash_file(&out.join(name)).as_deref() == Some(h.as_str()))
            });
        if fresh {
            log::info!("stage {}: up to date", stage.name());
            summary.skipped.push(stage);
            continue;
        }
        log::info!("stage {}: running", stage.name());
        manifest.stages.remove(stage.name());
        let outputs = stages::run_stage(stage, &ctx).map_err(|e| match e {
            Error::Config(_) | Error::Stage { .. } => e,
            other => Error::Stage {
                stage: stage.name(),
                source: Box::new(other),
            },
        })?;
        let outputs = outputs
            .into_iter()
            .map(|name| {
                let h = hash_file(&out.join(&name)).unwrap_or_default();
                (name, h)
            })
            .collect();
        manifest.stages.insert(
            stage.name().to_string(),
            StageRecord {
                config_hash,
                inputs,
                outputs,
            },
        );
        manifest.save(out)?;
        summary.ran.push(stage);
    }
    manifest.save(out)?;
    Ok(summary)
}
