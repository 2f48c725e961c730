use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Ctx, ModelConfig, PipelineConfig, Stage};
use crate::corpus::{filter_naive, load_ratings, read_segments, segment_novel, write_segments, chapter_curiosity};
use crate::diagdist::{bottleneck, wasserstein};
use crate::embed::{embed_segments, embedder_from_config, load_store, save_store};
use crate::error::{Error, Result};
use crate::gam::{compare_models, fit_gam, permutation_test, GamModel, GamSummary, ModelComparison, PermutationResult, SmoothTermSpec};
use crate::homology::{rips_persistence, PersistenceDiagram};
use crate::network::{build_series, network_metrics, read_series, write_edge_list, write_series, ChunkTopic, TopicId};
use crate::stats::{
    complete_cases, correlation_matrix, describe, icc_mean_ratings, FeatureTable, TOPO_COLUMNS,
};
use crate::topics::{chapter_topic_stats, reduce, write_assignments, TopicModel};

pub(crate) const SEGMENTS: &str = "segments.csv";
pub(crate) const EMBEDDINGS: &str = "embeddings.igv";
pub(crate) const REDUCED: &str = "reduced.igv";
pub(crate) const ASSIGNMENTS: &str = "topic_assignments.csv";
pub(crate) const CENTROIDS: &str = "centroids.igv";
pub(crate) const CHUNK_TOPICS: &str = "chunk_topics.csv";
pub(crate) const CHAPTER_TOPICS: &str = "chapter_topics.csv";
pub(crate) const TOPIC_FREQUENCY: &str = "topic_frequency.csv";
pub(crate) const TOPICS_SUMMARY: &str = "topics_summary.json";
pub(crate) const SERIES: &str = "network_series.csv";
pub(crate) const EDGES: &str = "network_edges.csv";
pub(crate) const NETWORK_METRICS: &str = "network_metrics.json";
pub(crate) const SNAPSHOT_METRICS: &str = "snapshot_metrics.csv";
pub(crate) const DIAGRAMS: &str = "diagrams.csv";
pub(crate) const BETTI: &str = "betti.csv";
pub(crate) const DISTANCES: &str = "distances.csv";
pub(crate) const CURIOSITY: &str = "curiosity.csv";
pub(crate) const FEATURES_RAW: &str = "features_raw.csv";
pub(crate) const FEATURES: &str = "features.csv";
pub(crate) const DESCRIPTIVES: &str = "descriptives.csv";
pub(crate) const CORRELATIONS: &str = "correlations.csv";
pub(crate) const ICC: &str = "icc.json";
pub(crate) const MODELS: &str = "models.json";
pub(crate) const FIT_SUMMARY: &str = "fit_summary.json";

/// Configuration that affects a stage's outputs.
pub(crate) fn stage_config(stage: Stage, cfg: &PipelineConfig) -> Value {
    let c = cfg.semantic();
    match stage {
        Stage::Segment => json!([c.clean, c.segmenter]),
        Stage::Embed => json!(c.embedder),
        Stage::Reduce => json!(c.reduction),
        Stage::Cluster => json!(c.cluster),
        Stage::Network => json!(c.seed),
        Stage::Homology => json!(c.homology),
        Stage::Distances => json!(c.distance),
        Stage::Features => json!([c.input.ratings_columns, c.features]),
        Stage::Fit => json!([c.seed, c.model]),
        Stage::Report => json!(null),
    }
}

/// Files read by a stage, keyed for the manifest.
pub(crate) fn stage_inputs(stage: Stage, cfg: &PipelineConfig) -> Vec<(String, PathBuf)> {
    let art = |names: &[&str]| -> Vec<(String, PathBuf)> {
        names.iter().map(|n| (n.to_string(), cfg.out_dir.join(n))).collect()
    };
    match stage {
        Stage::Segment => vec![("input:novel".into(), cfg.input.novel.clone())],
        Stage::Embed => art(&[SEGMENTS]),
        Stage::Reduce => {
            let mut v = art(&[EMBEDDINGS]);
            if let Some(p) = &cfg.reduction.external_path {
                v.push(("input:reduction".into(), p.clone()));
            }
            v
        }
        Stage::Cluster => art(&[REDUCED, EMBEDDINGS, SEGMENTS]),
        Stage::Network => art(&[CHUNK_TOPICS, CENTROIDS]),
        Stage::Homology => art(&[SERIES]),
        Stage::Distances => art(&[DIAGRAMS, BETTI]),
        Stage::Features => {
            let mut v = vec![("input:ratings".into(), cfg.input.ratings.clone())];
            v.extend(art(&[CHAPTER_TOPICS, BETTI, DISTANCES]));
            v
        }
        Stage::Fit => art(&[FEATURES]),
        Stage::Report => art(&[
            TOPICS_SUMMARY,
            CHAPTER_TOPICS,
            TOPIC_FREQUENCY,
            NETWORK_METRICS,
            DIAGRAMS,
            BETTI,
            CURIOSITY,
            FEATURES_RAW,
            DESCRIPTIVES,
            CORRELATIONS,
            ICC,
            FIT_SUMMARY,
        ]),
    }
}

pub(crate) fn run_stage(stage: Stage, ctx: &Ctx) -> Result<Vec<String>> {
    match stage {
        Stage::Segment => segment(ctx),
        Stage::Embed => embed(ctx),
        Stage::Reduce => reduce_stage(ctx),
        Stage::Cluster => cluster(ctx),
        Stage::Network => network(ctx),
        Stage::Homology => homology(ctx),
        Stage::Distances => distances(ctx),
        Stage::Features => features(ctx),
        Stage::Fit => fit(ctx),
        Stage::Report => super::report::report(ctx),
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn csv_bytes(f: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        f(&mut w)?;
        w.flush().map_err(|e| Error::io("<csv>", e))?;
    }
    Ok(buf)
}

fn segment(ctx: &Ctx) -> Result<Vec<String>> {
    let path = &ctx.cfg.input.novel;
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let segs = segment_novel(&raw, &ctx.cfg.clean, &ctx.cfg.segmenter)?;
    if segs.is_empty() {
        return Err(Error::Structure("the novel produced no segments".into()));
    }
    let mut buf = Vec::new();
    write_segments(&segs, &mut buf)?;
    ctx.write(SEGMENTS, buf)?;
    log::info!("{} segments", segs.len());
    Ok(names(&[SEGMENTS]))
}

fn embed(ctx: &Ctx) -> Result<Vec<String>> {
    let segs = read_segments(ctx.read(SEGMENTS)?.as_bytes())?;
    let embedder = embedder_from_config(&ctx.cfg.embedder)?;
    let m = embed_segments(&segs, embedder.as_ref())?;
    save_store(&m, &ctx.path(EMBEDDINGS))?;
    Ok(names(&[EMBEDDINGS]))
}

fn reduce_stage(ctx: &Ctx) -> Result<Vec<String>> {
    let m = load_store(&ctx.path(EMBEDDINGS))?;
    let r = reduce(&m, &ctx.cfg.reduction)?;
    save_store(&r, &ctx.path(REDUCED))?;
    Ok(names(&[REDUCED]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicsSummary {
    pub n_segments: usize,
    pub n_topics: usize,
    pub n_noise: usize,
}

fn write_chunk_topics(chunks: &[ChunkTopic]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        w.write_record(["segment_id", "chapter_index", "topic"])?;
        for c in chunks {
            let t = c.topic.map_or("-1".to_string(), |t| t.to_string());
            w.write_record([c.segment_id.to_string(), c.chapter_index.to_string(), t])?;
        }
        Ok(())
    })
}

fn read_chunk_topics(text: &str) -> Result<Vec<ChunkTopic>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let bad = || Error::Structure(format!("{CHUNK_TOPICS}: malformed row"));
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| rec.get(i).ok_or_else(bad);
            let topic: i64 = f(2)?.parse().map_err(|_| bad())?;
            Ok(ChunkTopic {
                segment_id: f(0)?.parse().map_err(|_| bad())?,
                chapter_index: f(1)?.parse().map_err(|_| bad())?,
                topic: TopicId::try_from(topic).ok(),
            })
        })
        .collect()
}

fn cluster(ctx: &Ctx) -> Result<Vec<String>> {
    let segs = read_segments(ctx.read(SEGMENTS)?.as_bytes())?;
    let original = load_store(&ctx.path(EMBEDDINGS))?;
    let reduced = load_store(&ctx.path(REDUCED))?;
    let model = TopicModel::fit(&reduced, &original, &ctx.cfg.cluster)?;
    let chunks = model.chunk_topics(&segs)?;
    let stats = chapter_topic_stats(&chunks);

    let mut buf = Vec::new();
    write_assignments(&model, &mut buf)?;
    ctx.write(ASSIGNMENTS, buf)?;
    save_store(&model.centroids, &ctx.path(CENTROIDS))?;
    ctx.write(CHUNK_TOPICS, write_chunk_topics(&chunks)?)?;
    ctx.write(
        CHAPTER_TOPICS,
        csv_bytes(|w| {
            w.write_record(["chapter_index", "n_topics", "n_novel"])?;
            for s in &stats {
                w.write_record([s.chapter_index.to_string(), s.n_topics.to_string(), s.n_novel.to_string()])?;
            }
            Ok(())
        })?,
    )?;
    ctx.write(
        TOPIC_FREQUENCY,
        csv_bytes(|w| {
            w.write_record(["chapter_index", "topic", "log2_count"])?;
            for s in &stats {
                for (t, f) in &s.freq_log2 {
                    w.write_record([s.chapter_index.to_string(), t.to_string(), f.to_string()])?;
                }
            }
            Ok(())
        })?,
    )?;
    let summary = TopicsSummary {
        n_segments: segs.len(),
        n_topics: model.n_topics(),
        n_noise: model.n_noise(),
    };
    log::info!("{} topics, {} noise segments", summary.n_topics, summary.n_noise);
    ctx.write_json(TOPICS_SUMMARY, &summary)?;
    Ok(names(&[ASSIGNMENTS, CENTROIDS, CHUNK_TOPICS, CHAPTER_TOPICS, TOPIC_FREQUENCY, TOPICS_SUMMARY]))
}

fn network(ctx: &Ctx) -> Result<Vec<String>> {
    let chunks = read_chunk_topics(&ctx.read(CHUNK_TOPICS)?)?;
    let centroids = load_store(&ctx.path(CENTROIDS))?;
    let series = build_series(&chunks, &centroids)?;
    let mut buf = Vec::new();
    write_series(&series, &mut buf)?;
    ctx.write(SERIES, buf)?;
    let last = series.last().cloned().unwrap_or_default();
    let mut buf = Vec::new();
    write_edge_list(&last, &mut buf)?;
    ctx.write(EDGES, buf)?;

    let metrics: Vec<_> = series
        .snapshots
        .par_iter()
        .map(|g| network_metrics(g, ctx.cfg.seed).ok())
        .collect();
    let final_metrics = metrics.last().cloned().flatten();
    ctx.write_json(NETWORK_METRICS, &final_metrics)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    ctx.write(
        SNAPSHOT_METRICS,
        csv_bytes(|w| {
            w.write_record([
                "chapter_index",
                "n_vertices",
                "n_edges",
                "mean_degree",
                "weighted_diameter",
                "unweighted_diameter",
                "avg_shortest_path",
                "clustering_coefficient",
                "small_worldness",
                "disconnected",
            ])?;
            for ((c, g), m) in series.chapters.iter().zip(&series.snapshots).zip(&metrics) {
                let cells = match m {
                    Some(m) => vec![
                        m.degree.mean.to_string(),
                        m.weighted_diameter.to_string(),
                        m.unweighted_diameter.to_string(),
                        m.avg_shortest_path.to_string(),
                        m.clustering_coefficient.to_string(),
                        opt(m.small_worldness),
                        m.disconnected.to_string(),
                    ],
                    None => vec![String::new(); 7],
                };
                let mut rec = vec![c.to_string(), g.n_vertices().to_string(), g.n_edges().to_string()];
                rec.extend(cells);
                w.write_record(rec)?;
            }
            Ok(())
        })?,
    )?;
    Ok(names(&[SERIES, EDGES, NETWORK_METRICS, SNAPSHOT_METRICS]))
}

/// Diagrams for dimensions 0..=2 of one snapshot; dimensions above
/// `max_dim` are left empty.
fn snapshot_diagrams(g: &crate::network::TopicGraph, max_dim: usize) -> Result<([PersistenceDiagram; 3], bool)> {
    let mut out = [PersistenceDiagram::empty(0), PersistenceDiagram::empty(1), PersistenceDiagram::empty(2)];
    if g.n_vertices() == 0 {
        return Ok((out, false));
    }
    let (_, dm) = g.geodesic_matrix()?;
    for d in rips_persistence(&dm, max_dim)? {
        let k = d.dim;
        out[k] = d;
    }
    Ok((out, dm.sentinel_used()))
}

fn homology(ctx: &Ctx) -> Result<Vec<String>> {
    let series = read_series(ctx.read(SERIES)?.as_bytes())?;
    let max_dim = ctx.cfg.homology.max_dim;
    let results: Vec<([PersistenceDiagram; 3], bool)> = series
        .snapshots
        .par_iter()
        .map(|g| snapshot_diagrams(g, max_dim))
        .collect::<Result<_>>()?;
    ctx.write(
        DIAGRAMS,
        csv_bytes(|w| {
            w.write_record(["chapter_index", "dim", "birth", "death"])?;
            for (c, (ds, _)) in series.chapters.iter().zip(&results) {
                for d in ds {
                    for (b, e) in d.sorted_points() {
                        w.write_record([c.to_string(), d.dim.to_string(), b.to_string(), e.to_string()])?;
                    }
                }
            }
            Ok(())
        })?,
    )?;
    ctx.write(
        BETTI,
        csv_bytes(|w| {
            w.write_record(["chapter_index", "n_vertices", "beta0", "beta1", "beta2", "sentinel_used"])?;
            for ((c, (ds, sentinel)), g) in series.chapters.iter().zip(&results).zip(&series.snapshots) {
                w.write_record([
                    c.to_string(),
                    g.n_vertices().to_string(),
                    ds[0].len().to_string(),
                    ds[1].len().to_string(),
                    ds[2].len().to_string(),
                    sentinel.to_string(),
                ])?;
            }
            Ok(())
        })?,
    )?;
    Ok(names(&[DIAGRAMS, BETTI]))
}

pub(crate) fn read_betti(text: &str) -> Result<Vec<(usize, [f64; 3])>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let bad = || Error::Structure(format!("{BETTI}: malformed row"));
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad);
            Ok((f(0)? as usize, [f(2)?, f(3)?, f(4)?]))
        })
        .collect()
}

/// Diagrams per chapter (dims 0..=2), for every chapter listed in `chapters`.
pub(crate) fn read_diagrams(text: &str, chapters: &[usize]) -> Result<Vec<[PersistenceDiagram; 3]>> {
    let mut by: BTreeMap<usize, [Vec<(f64, f64)>; 3]> =
        chapters.iter().map(|&c| (c, [Vec::new(), Vec::new(), Vec::new()])).collect();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let bad = || Error::Structure(format!("{DIAGRAMS}: malformed row"));
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad);
        let (c, d) = (f(0)? as usize, f(1)? as usize);
        let slot = by.get_mut(&c).filter(|_| d < 3).ok_or_else(bad)?;
        slot[d].push((f(2)?, f(3)?));
    }
    Ok(chapters
        .iter()
        .map(|c| {
            let [a, b, d] = by.remove(c).expect("seeded");
            [PersistenceDiagram::new(0, a), PersistenceDiagram::new(1, b), PersistenceDiagram::new(2, d)]
        })
        .collect())
}

fn distances(ctx: &Ctx) -> Result<Vec<String>> {
    let chapters: Vec<usize> = read_betti(&ctx.read(BETTI)?)?.into_iter().map(|b| b.0).collect();
    let diagrams = read_diagrams(&ctx.read(DIAGRAMS)?, &chapters)?;
    let cfg = &ctx.cfg.distance;
    ctx.write(
        DISTANCES,
        csv_bytes(|w| {
            w.write_record(["chapter_index", "dim", "wasserstein", "bottleneck"])?;
            for dim in 0..3 {
                let empty = PersistenceDiagram::empty(dim);
                let mut prev = &empty;
                for (c, ds) in chapters.iter().zip(&diagrams) {
                    let cur = &ds[dim];
                    w.write_record([
                        c.to_string(),
                        dim.to_string(),
                        wasserstein(prev, cur, cfg)?.to_string(),
                        bottleneck(prev, cur)?.to_string(),
                    ])?;
                    prev = cur;
                }
            }
            Ok(())
        })?,
    )?;
    Ok(names(&[DISTANCES]))
}

fn features(ctx: &Ctx) -> Result<Vec<String>> {
    let path = &ctx.cfg.input.ratings;
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let loaded = load_ratings(std::io::BufReader::new(f), &ctx.cfg.input.ratings_columns)?;
    let curiosity = chapter_curiosity(&loaded.records)?;

    let betti = read_betti(&ctx.read(BETTI)?)?;
    let chapters: Vec<usize> = betti.iter().map(|b| b.0).collect();
    let mut topo: Vec<[f64; 9]> = betti
        .iter()
        .map(|(_, b)| {
            let mut t = [0.0; 9];
            t[..3].copy_from_slice(b);
            t
        })
        .collect();
    let pos: BTreeMap<usize, usize> = chapters.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut r = csv::Reader::from_reader(std::io::Cursor::new(ctx.read(DISTANCES)?));
    let bad = || Error::Structure(format!("{DISTANCES}: malformed row"));
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad);
        let (c, d) = (f(0)? as usize, f(1)? as usize);
        let i = *pos.get(&c).ok_or_else(bad)?;
        if d >= 3 {
            return Err(bad());
        }
        topo[i][3 + d] = f(2)?;
        topo[i][6 + d] = f(3)?;
    }
    let mut novel = BTreeMap::new();
    let mut r = csv::Reader::from_reader(std::io::Cursor::new(ctx.read(CHAPTER_TOPICS)?));
    for rec in r.records() {
        let rec = rec?;
        let c: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let n: usize = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        novel.insert(c, n);
    }

    let raw = FeatureTable::from_topology(&chapters, &curiosity, &novel, &topo)?;
    let processed = raw.processed(ctx.cfg.features.winsor_lo, ctx.cfg.features.winsor_hi)?;
    let mut buf = Vec::new();
    raw.write_csv(&mut buf)?;
    ctx.write(FEATURES_RAW, buf)?;
    let mut buf = Vec::new();
    processed.write_csv(&mut buf)?;
    ctx.write(FEATURES, buf)?;

    ctx.write(
        CURIOSITY,
        csv_bytes(|w| {
            w.write_record(["chapter_index", "mean_curiosity", "n_raters"])?;
            for c in &curiosity {
                w.write_record([c.chapter_index.to_string(), c.mean_curiosity.to_string(), c.n_raters.to_string()])?;
            }
            Ok(())
        })?,
    )?;

    let (d_raw, d_proc) = (describe(&raw)?, describe(&processed)?);
    ctx.write(
        DESCRIPTIVES,
        csv_bytes(|w| {
            w.write_record([
                "variable",
                "raw_mean",
                "raw_sd",
                "raw_min",
                "raw_max",
                "processed_mean",
                "processed_sd",
                "processed_min",
                "processed_max",
            ])?;
            for (a, b) in d_raw.iter().zip(&d_proc) {
                w.write_record([
                    a.variable.clone(),
                    a.mean.to_string(),
                    a.sd.to_string(),
                    a.min.to_string(),
                    a.max.to_string(),
                    b.mean.to_string(),
                    b.sd.to_string(),
                    b.min.to_string(),
                    b.max.to_string(),
                ])?;
            }
            Ok(())
        })?,
    )?;

    let cols: Vec<&str> = FeatureTable::header();
    let corr = correlation_matrix(&processed, &cols)?;
    ctx.write(
        CORRELATIONS,
        csv_bytes(|w| {
            let mut head = vec!["variable"];
            head.extend(&cols);
            w.write_record(head)?;
            for (name, row) in cols.iter().zip(&corr) {
                let mut rec = vec![name.to_string()];
                rec.extend(row.iter().map(|v| v.map_or(String::new(), |v| v.to_string())));
                w.write_record(rec)?;
            }
            Ok(())
        })?,
    )?;

    let naive = complete_cases(&filter_naive(&loaded.records));
    let participants: BTreeSet<&str> = naive.iter().map(|r| r.participant_id.as_str()).collect();
    let icc = match icc_mean_ratings(&naive) {
        Ok(vc) => json!({ "n_participants": participants.len(), "components": vc }),
        Err(e) => {
            log::warn!("variance components unavailable: {e}");
            json!({ "n_participants": participants.len(), "components": null, "error": e.to_string() })
        }
    };
    ctx.write_json(ICC, &icc)?;
    Ok(names(&[FEATURES_RAW, FEATURES, CURIOSITY, DESCRIPTIVES, CORRELATIONS, ICC]))
}

/// Control covariates of the null model.
pub const CONTROLS: [&str; 2] = ["n_novel_topics", "chapter_index"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub n: usize,
    /// Covariates left out because they take fewer than three distinct values.
    pub dropped_covariates: Vec<String>,
    pub null: GamSummary,
    pub full: GamSummary,
    pub comparison: Option<ModelComparison>,
    pub comparison_error: Option<String>,
    pub permutation_null: PermutationResult,
    pub permutation_full: PermutationResult,
}

fn distinct(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Fit the null (controls) and full (controls + topology) models on a
/// feature table, with permutation tests and the nested comparison.
pub fn fit_models(table: &FeatureTable, model: &ModelConfig, seed: u64) -> Result<(FitSummary, GamModel, GamModel)> {
    let y = table.column("mean_curiosity")?;
    let mut dropped = Vec::new();
    let mut usable = |names: &[&str]| -> Result<(Vec<Vec<f64>>, Vec<SmoothTermSpec>)> {
        let mut cols = Vec::new();
        let mut specs = Vec::new();
        for &n in names {
            let c = table.column(n)?;
            if distinct(&c) < 3 {
                log::warn!("covariate {n} has fewer than 3 distinct values; left out of the models");
                if !dropped.contains(&n.to_string()) {
                    dropped.push(n.to_string());
                }
                continue;
            }
            cols.push(c);
            specs.push(SmoothTermSpec::new(n).with_basis_dim(model.basis_dim));
        }
        Ok((cols, specs))
    };
    let (null_cols, null_specs) = usable(&CONTROLS)?;
    let mut all: Vec<&str> = CONTROLS.to_vec();
    all.extend(TOPO_COLUMNS);
    let (full_cols, full_specs) = usable(&all)?;
    fn as_refs(c: &[Vec<f64>]) -> Vec<&[f64]> {
        c.iter().map(Vec::as_slice).collect()
    }
    let (nr, fr) = (as_refs(&null_cols), as_refs(&full_cols));

    let gc = &model.smoothing;
    let null = fit_gam(&y, &nr, &null_specs, gc)?;
    let full = fit_gam(&y, &fr, &full_specs, gc)?;
    let (comparison, comparison_error) = match compare_models(&null, &full) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let permutation_null = permutation_test(&y, &nr, &null_specs, gc, model.permutations, seed)?;
    let permutation_full = permutation_test(&y, &fr, &full_specs, gc, model.permutations, seed)?;
    let summary = FitSummary {
        n: y.len(),
        dropped_covariates: dropped,
        null: null.summary(),
        full: full.summary(),
        comparison,
        comparison_error,
        permutation_null,
        permutation_full,
    };
    Ok((summary, null, full))
}

fn fit(ctx: &Ctx) -> Result<Vec<String>> {
    let table = FeatureTable::read_csv(ctx.read(FEATURES)?.as_bytes())?;
    let (summary, null_model, full_model) = fit_models(&table, &ctx.cfg.model, ctx.cfg.seed)?;
    ctx.write_json(MODELS, &json!({ "null": null_model, "full": full_model }))?;
    ctx.write_json(FIT_SUMMARY, &summary)?;
    Ok(names(&[MODELS, FIT_SUMMARY]))
}
