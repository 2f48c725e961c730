use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::figures::{render_figure, FigureKind};
use super::stages::*;
use super::Ctx;
use crate::error::{Error, Result};
use crate::network::NetworkMetrics;
use crate::stats::FeatureTable;

/// Fixed figures: file stem under `figures/`, kind and title.
pub const FIGURES: [(&str, FigureKind, &str); 6] = [
    ("curiosity", FigureKind::Series, "Mean curiosity per chapter"),
    ("topic_counts", FigureKind::Series, "Topics per chapter"),
    ("topic_frequency", FigureKind::Heatmap, "Topic frequency (log2 count) by chapter"),
    ("topology", FigureKind::Series, "Topological features per chapter"),
    ("persistence_final", FigureKind::Persistence, "Persistence diagram, full novel"),
    ("correlations", FigureKind::Heatmap, "Spearman correlations"),
];

const FIGURE_DIR: &str = "figures";
const SNAPSHOT_DIR: &str = "figures/persistence";
pub(crate) const REPORT: &str = "report.md";

fn select(csv_text: &str, columns: &[&str]) -> Result<String> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let head = r.headers()?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            head.iter()
                .position(|h| h == *c)
                .ok_or_else(|| Error::Structure(format!("missing column {c}")))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(columns)?;
        for rec in r.records() {
            let rec = rec?;
            w.write_record(idx.iter().map(|&i| rec.get(i).unwrap_or("")))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
    }
    Ok(String::from_utf8(out).expect("csv is utf-8"))
}

fn frequency_wide(long: &str) -> Result<String> {
    let mut r = csv::Reader::from_reader(long.as_bytes());
    let mut cells: BTreeMap<usize, BTreeMap<u64, String>> = BTreeMap::new();
    let mut topics = BTreeSet::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || Error::Structure(format!("{TOPIC_FREQUENCY}: malformed row"));
        let c: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let t: u64 = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        topics.insert(t);
        cells.entry(c).or_default().insert(t, rec.get(2).unwrap_or("").to_string());
    }
    let mut out = String::from("chapter");
    for t in &topics {
        let _ = write!(out, ",topic {t}");
    }
    out.push('\n');
    for (c, row) in &cells {
        let _ = write!(out, "{c}");
        for t in &topics {
            let _ = write!(out, ",{}", row.get(t).map_or("", String::as_str));
        }
        out.push('\n');
    }
    Ok(out)
}

fn diagram_rows(diagrams: &str, chapter: usize) -> Result<String> {
    let mut r = csv::Reader::from_reader(diagrams.as_bytes());
    let mut out = String::from("dim,birth,death\n");
    for rec in r.records() {
        let rec = rec?;
        if rec.get(0).and_then(|s| s.parse::<usize>().ok()) == Some(chapter) {
            let _ = writeln!(out, "{},{},{}", &rec[1], &rec[2], &rec[3]);
        }
    }
    Ok(out)
}

fn figure(ctx: &Ctx, outputs: &mut Vec<String>, stem: &str, kind: FigureKind, title: &str, data: String) -> Result<()> {
    let svg = render_figure(kind, title, &data)?;
    let (csv_name, svg_name) = (format!("{stem}.csv"), format!("{stem}.svg"));
    ctx.write(&csv_name, data)?;
    ctx.write(&svg_name, svg)?;
    outputs.push(csv_name);
    outputs.push(svg_name);
    Ok(())
}

fn snapshot_title(chapter: usize) -> String {
    format!("Persistence diagram through chapter {chapter}")
}

/// Re-render every figure SVG from its data file in `out_dir`.
pub fn regenerate_figures(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut render = |csv_path: PathBuf, kind: FigureKind, title: &str| -> Result<()> {
        let data = std::fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let svg_path = csv_path.with_extension("svg");
        let svg = render_figure(kind, title, &data)?;
        std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
        written.push(svg_path);
        Ok(())
    };
    for (stem, kind, title) in FIGURES {
        render(out_dir.join(FIGURE_DIR).join(format!("{stem}.csv")), kind, title)?;
    }
    let dir = out_dir.join(SNAPSHOT_DIR);
    let mut snapshots: Vec<(usize, PathBuf)> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| {
            let stem = p.file_stem()?.to_str()?;
            let c = stem.strip_prefix("chapter_")?.parse().ok()?;
            (p.extension()? == "csv").then_some((c, p))
        })
        .collect();
    snapshots.sort();
    for (c, p) in snapshots {
        render(p, FigureKind::Persistence, &snapshot_title(c))?;
    }
    Ok(written)
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), fmt)
}

pub(crate) fn report(ctx: &Ctx) -> Result<Vec<String>> {
    let mut outputs = Vec::new();
    let fig = |s: &str| format!("{FIGURE_DIR}/{s}");

    let diagrams = ctx.read(DIAGRAMS)?;
    let betti = read_betti(&ctx.read(BETTI)?)?;
    let chapters: Vec<usize> = betti.iter().map(|b| b.0).collect();
    let last = chapters.last().copied().unwrap_or(0);
    let mut topo_cols = vec!["chapter_index"];
    topo_cols.extend(crate::stats::TOPO_COLUMNS);

    let data = [
        select(&ctx.read(CURIOSITY)?, &["chapter_index", "mean_curiosity"])?,
        select(&ctx.read(CHAPTER_TOPICS)?, &["chapter_index", "n_topics", "n_novel"])?,
        frequency_wide(&ctx.read(TOPIC_FREQUENCY)?)?,
        select(&ctx.read(FEATURES_RAW)?, &topo_cols)?,
        diagram_rows(&diagrams, last)?,
        ctx.read(CORRELATIONS)?,
    ];
    for ((stem, kind, title), d) in FIGURES.into_iter().zip(data) {
        figure(ctx, &mut outputs, &fig(stem), kind, title, d)?;
    }
    for &c in &chapters {
        let stem = format!("{SNAPSHOT_DIR}/chapter_{c}");
        figure(ctx, &mut outputs, &stem, FigureKind::Persistence, &snapshot_title(c), diagram_rows(&diagrams, c)?)?;
    }

    let topics: TopicsSummary = serde_json::from_str(&ctx.read(TOPICS_SUMMARY)?)?;
    let network: Option<NetworkMetrics> = serde_json::from_str(&ctx.read(NETWORK_METRICS)?)?;
    let icc: Value = serde_json::from_str(&ctx.read(ICC)?)?;
    let fit: FitSummary = serde_json::from_str(&ctx.read(FIT_SUMMARY)?)?;
    let raw = FeatureTable::read_csv(ctx.read(FEATURES_RAW)?.as_bytes())?;

    let mut md = String::new();
    let _ = writeln!(md, "# Curiosity and topic-network topology\n");
    let _ = writeln!(md, "Seed: {}. Configuration hash: `{}`.\n", ctx.cfg.seed, ctx.cfg.config_hash());

    let _ = writeln!(md, "## Topics\n");
    let _ = writeln!(
        md,
        "{} segments, {} topics, {} segments labelled as noise.\n",
        topics.n_segments, topics.n_topics, topics.n_noise
    );

    let _ = writeln!(md, "## Topic network (final snapshot)\n");
    match &network {
        Some(m) => {
            let _ = writeln!(md, "| Metric | Value |\n|---|---|");
            let rows = [
                ("Vertices", m.n_vertices.to_string()),
                ("Edges", m.n_edges.to_string()),
                ("Mean degree", fmt(m.degree.mean)),
                ("Weighted diameter", fmt(m.weighted_diameter)),
                ("Unweighted diameter", m.unweighted_diameter.to_string()),
                ("Average shortest path", fmt(m.avg_shortest_path)),
                ("Clustering coefficient", fmt(m.clustering_coefficient)),
                ("Small-world index", opt_fmt(m.small_worldness)),
                ("Disconnected", m.disconnected.to_string()),
            ];
            for (k, v) in rows {
                let _ = writeln!(md, "| {k} | {v} |");
            }
            md.push('\n');
        }
        None => {
            let _ = writeln!(md, "Too few topics for network metrics.\n");
        }
    }

    let _ = writeln!(md, "## Rater agreement\n");
    match icc.get("components").filter(|c| !c.is_null()) {
        Some(c) => {
            let g = |k: &str| c.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN);
            let _ = writeln!(
                md,
                "ICC of mean ratings: {} over {} raters. Intercept {} (SE {}).\n",
                fmt(g("icc")),
                c.get("k_raters").and_then(Value::as_u64).unwrap_or(0),
                fmt(g("intercept")),
                fmt(g("intercept_se"))
            );
        }
        None => {
            let e = icc.get("error").and_then(Value::as_str).unwrap_or("unknown");
            let _ = writeln!(md, "Variance components unavailable: {e}.\n");
        }
    }

    let _ = writeln!(md, "## Features\n");
    let _ = writeln!(md, "{} chapters. Descriptives before detrending and winsorizing:\n", raw.len());
    let _ = writeln!(md, "| Variable | Mean | SD | Min | Max |\n|---|---|---|---|---|");
    for d in crate::stats::describe(&raw)? {
        let _ = writeln!(md, "| {} | {} | {} | {} | {} |", d.variable, fmt(d.mean), fmt(d.sd), fmt(d.min), fmt(d.max));
    }
    md.push('\n');

    let _ = writeln!(md, "## Models\n");
    if !fit.dropped_covariates.is_empty() {
        let _ = writeln!(
            md,
            "Left out (fewer than three distinct values): {}.\n",
            fit.dropped_covariates.join(", ")
        );
    }
    let _ = writeln!(
        md,
        "| Model | edf | Deviance | Deviance explained (%) | Adjusted R2 | Permutation p |\n|---|---|---|---|---|---|"
    );
    for (label, s, p) in [
        ("Null model (control variables only)", &fit.null, &fit.permutation_null),
        ("Full model (controls + topological features)", &fit.full, &fit.permutation_full),
    ] {
        let _ = writeln!(
            md,
            "| {label} | {} | {} | {:.2} | {} | {} |",
            fmt(s.edf_total),
            fmt(s.deviance),
            100.0 * s.deviance_explained,
            fmt(s.r2_adj),
            fmt(p.p_deviance_explained)
        );
    }
    md.push('\n');
    match (&fit.comparison, &fit.comparison_error) {
        (Some(c), _) => {
            let _ = writeln!(
                md,
                "Likelihood-ratio comparison: chi2 = {}, df = {}, p = {}.\n",
                fmt(c.chi2),
                fmt(c.df),
                fmt(c.p_value)
            );
        }
        (None, Some(e)) => {
            let _ = writeln!(md, "Model comparison unavailable: {e}.\n");
        }
        (None, None) => {}
    }
    let _ = writeln!(md, "Smooth terms of the full model:\n");
    let _ = writeln!(md, "| Covariate | k | edf | lambda |\n|---|---|---|---|");
    for t in &fit.full.terms {
        let _ = writeln!(md, "| {} | {} | {} | {:.3e} |", t.covariate, t.basis_dim, fmt(t.edf), t.lambda);
    }
    md.push('\n');

    let _ = writeln!(md, "## Figures\n");
    for (stem, _, title) in FIGURES {
        let _ = writeln!(md, "- [{title}]({FIGURE_DIR}/{stem}.svg)");
    }
    let _ = writeln!(md, "- Per-chapter persistence diagrams: `{SNAPSHOT_DIR}/`");

    ctx.write(REPORT, md)?;
    outputs.push(REPORT.to_string());
    Ok(outputs)
}
