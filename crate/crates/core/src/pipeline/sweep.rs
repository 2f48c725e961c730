use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stages::{FitSummary, TopicsSummary, FIT_SUMMARY, NETWORK_METRICS, TOPICS_SUMMARY};
use super::{run_until, PipelineConfig, Stage, SweepCell};
use crate::error::{Error, Result};
use crate::network::NetworkMetrics;

/// Sweep table file name inside the base output directory.
pub const SWEEP_TABLE: &str = "sweep.csv";

/// One grid cell. Metric fields are empty when the cell failed before
/// producing them; `status` is `ok` or the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub embedder: String,
    pub window_size: usize,
    pub overlap: usize,
    pub min_cluster_size: usize,
    pub n_topics: Option<usize>,
    pub n_noise: Option<usize>,
    pub weighted_diameter: Option<f64>,
    pub unweighted_diameter: Option<usize>,
    pub full_deviance_explained: Option<f64>,
    pub null_deviance_explained: Option<f64>,
    pub full_permutation_p: Option<f64>,
    pub status: String,
}

fn read_json<T: serde::de::DeserializeOwned>(cell: &SweepCell, name: &str) -> Option<T> {
    let text = std::fs::read_to_string(cell.config.out_dir.join(name)).ok()?;
    serde_json::from_str(&text).ok()
}

fn run_cell(cell: &SweepCell) -> SweepRow {
    let mut cfg = cell.config.clone();
    cfg.workers = 1;
    let outcome = run_until(&cfg, Stage::Fit);
    let topics: Option<TopicsSummary> = read_json(cell, TOPICS_SUMMARY);
    let network: Option<NetworkMetrics> = read_json::<Option<NetworkMetrics>>(cell, NETWORK_METRICS).flatten();
    let fit: Option<FitSummary> = outcome.as_ref().ok().and(read_json(cell, FIT_SUMMARY));
    let status = match &outcome {
        Ok(_) => "ok".to_string(),
        Err(e) => {
            log::warn!("sweep cell {} failed: {e}", cell.name);
            e.to_string()
        }
    };
    // Artifacts of a failed cell may be stale; report only what this run produced.
    let ok_upto = |s: Stage| match &outcome {
        Ok(_) => true,
        Err(Error::Stage { stage, .. }) => Stage::parse(stage).is_some_and(|f| s < f),
        Err(_) => false,
    };
    let topics = topics.filter(|_| ok_upto(Stage::Cluster));
    let network = network.filter(|_| ok_upto(Stage::Network));
    SweepRow {
        embedder: cell.embedder.clone(),
        window_size: cell.window_size,
        overlap: cell.overlap,
        min_cluster_size: cell.config.cluster.min_cluster_size,
        n_topics: topics.as_ref().map(|t| t.n_topics),
        n_noise: topics.as_ref().map(|t| t.n_noise),
        weighted_diameter: network.as_ref().map(|m| m.weighted_diameter),
        unweighted_diameter: network.as_ref().map(|m| m.unweighted_diameter),
        full_deviance_explained: fit.as_ref().map(|f| f.full.deviance_explained),
        null_deviance_explained: fit.as_ref().map(|f| f.null.deviance_explained),
        full_permutation_p: fit.as_ref().map(|f| f.permutation_full.p_deviance_explained),
        status,
    }
}

/// Run the pipeline through model fitting for every grid cell and write
/// the sweep table. Cells run in parallel, each single-threaded; a failing
/// cell is recorded and the rest continue.
pub fn run_sweep(cfg: &PipelineConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let cells = cfg.sweep.cells(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| cells.par_iter().map(run_cell).collect());
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join(SWEEP_TABLE);
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
