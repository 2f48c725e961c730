//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria that need the shared study data read it from the directory named
//! by `CURIOSITY_DATA_DIR` (`ratings.csv`, `features_raw.csv` or
//! `features.csv`, `novel.txt`). Without it they are reported as FAIL with a
//! `[blocked]` marker and do not affect the exit status.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::{brute_force_matching, diagrams_match, naive_rips, random_diagram, random_graph, random_matrix};
use infogap_core::corpus::{filter_naive, load_ratings, segment_novel, window_spans, CleanConfig, RatingColumns, SegmenterConfig};
use infogap_core::diagdist::{bottleneck, bottleneck_points, wasserstein, wasserstein_points, DiagramDistanceConfig};
use infogap_core::gam::{fit_gam, permutation_test, GamConfig, SmoothTermSpec};
use infogap_core::homology::{betti_counts, geodesic_distances, rips_persistence, DistanceMatrix, PersistenceDiagram};
use infogap_core::network::build_series;
use infogap_core::pipeline::{fit_models, run_pipeline, run_sweep, ModelConfig, PipelineConfig, SWEEP_TABLE};
use infogap_core::stats::{complete_cases, icc_from_components, icc_mean_ratings, FeatureTable};
use infogap_core::synthetic::{surrogate_topics, synthetic_novel, synthetic_ratings, NovelConfig, SurrogateConfig};
use infogap_core::topics::{hdbscan, ClusterConfig, Clustering, TopicId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

mod tol {
    use std::time::Duration;

    pub const DIAGRAM: f64 = 1e-9;
    pub const ORACLE_BUDGET: Duration = Duration::from_secs(60);
    pub const STABILITY_SLACK: f64 = 1e-9;
    pub const WASSERSTEIN: f64 = 1e-9;
    pub const METRIC_SLACK: f64 = 1e-9;
    pub const HOMOLOGY_BUDGET: Duration = Duration::from_secs(120);
    pub const CLUSTER_AGREEMENT: f64 = 0.95;
    pub const ICC_PUBLISHED: f64 = 0.71;
    pub const ICC_FROM_COMPONENTS: f64 = 0.005;
    pub const COMPONENT_REL: f64 = 0.10;
    pub const ICC_FROM_RATINGS: f64 = 0.03;
    pub const NULL_DEV_EXPLAINED: f64 = 0.297;
    pub const NULL_DEV_BAND: f64 = 0.10;
    pub const FULL_OVER_NULL: f64 = 0.25;
    pub const FULL_PERM_P: f64 = 0.10;
    pub const STATS_BUDGET: Duration = Duration::from_secs(300);
    pub const LINEAR_FIT: f64 = 1e-6;
    pub const SINE_BAND: (f64, f64) = (0.85, 0.99);
    pub const CORPUS_SEGMENTS: f64 = 2656.0;
    pub const CORPUS_REL: f64 = 0.10;
}

/// Published variance components: chapter, subject, residual.
const PUBLISHED_COMPONENTS: [f64; 3] = [10.48, 229.95, 214.36];
const PUBLISHED_RATERS: usize = 49;

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, &'static str, Box<dyn Fn() -> Outcome>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn from(r: Check) -> Outcome {
    match r {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("CURIOSITY_DATA_DIR").map(PathBuf::from).filter(|p| p.is_dir())
}

fn needs(file: &str) -> std::result::Result<PathBuf, Outcome> {
    match data_dir() {
        Some(d) if d.join(file).is_file() => Ok(d.join(file)),
        Some(d) => Err(Outcome::Blocked(format!("{} not found", d.join(file).display()))),
        None => Err(Outcome::Blocked(format!("shared data unavailable; set CURIOSITY_DATA_DIR to a directory with {file}"))),
    }
}

fn persistence_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for case in 0..200 {
        let n = rng.random_range(1..=12);
        let p = rng.random_range(0.15..0.8);
        let dm = geodesic_distances(n, &random_graph(&mut rng, n, p)).map_err(|e| e.to_string())?;
        let fast = rips_persistence(&dm, 2).map_err(|e| e.to_string())?;
        let slow = naive_rips(&dm, 2);
        for k in 0..=2 {
            ensure(diagrams_match(&fast[k], &slow[k], tol::DIAGRAM), || format!("graph {case} (n = {n}) differs in dim {k}"))?;
        }
    }
    let t = start.elapsed();
    ensure(t < tol::ORACLE_BUDGET, || format!("took {t:?}"))?;
    Ok(format!("200 graphs identical to the naive reduction in {:.2} s", t.as_secs_f64()))
}

fn analytic_cases() -> Check {
    let square = geodesic_distances(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
    let d = rips_persistence(&square, 2).unwrap();
    ensure(d[1].points == vec![(1.0, 2.0)] && d[2].points.is_empty(), || format!("4-cycle H1 = {:?}", d[1].points))?;

    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut trees = 0;
    for n in 2..=14 {
        for _ in 0..10 {
            let edges: Vec<_> = (1..n).map(|v| (rng.random_range(0..v), v, rng.random_range(1..=5) as f64)).collect();
            let b = betti_counts(&rips_persistence(&geodesic_distances(n, &edges).unwrap(), 2).unwrap());
            ensure((b.beta0, b.beta1, b.beta2) == (n - 1, 0, 0), || format!("tree on {n} vertices: {b:?}"))?;
            trees += 1;
        }
    }
    let triple = DistanceMatrix::new(3, vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
    let t = rips_persistence(&triple, 2).unwrap();
    ensure(t[1].points.is_empty(), || format!("equidistant triple H1 = {:?}", t[1].points))?;
    Ok(format!("4-cycle H1 = {{(1, 2)}}, {trees} trees, equidistant triple"))
}

fn stability() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut worst: f64 = 0.0;
    for m in 0..50 {
        let n = rng.random_range(4..=11);
        let dm = random_matrix(&mut rng, n);
        let base = rips_persistence(&dm, 2).unwrap();
        for delta in [1e-3, 1e-2] {
            let mut d = vec![0.0; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let v = (dm.get(i, j) + rng.random_range(-delta..=delta)).max(0.0);
                    d[i * n + j] = v;
                    d[j * n + i] = v;
                }
            }
            let other = rips_persistence(&DistanceMatrix::new(n, d).unwrap(), 2).unwrap();
            for k in 0..=2 {
                let shift = bottleneck(&base[k], &other[k]).unwrap();
                worst = worst.max(shift / delta);
                ensure(shift <= delta + tol::STABILITY_SLACK, || format!("matrix {m} dim {k}: shift {shift} > {delta}"))?;
            }
        }
    }
    Ok(format!("50 matrices x 2 perturbation sizes; max shift/delta = {worst:.3}"))
}

fn diagram_distances() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let cfg = DiagramDistanceConfig::default();
    let mut worst: f64 = 0.0;
    for pair in 0..100 {
        let (a, b) = (random_diagram(&mut rng, 6), random_diagram(&mut rng, 6));
        let w1 = wasserstein_points(&a, &b, 1.0);
        let err = (w1 - brute_force_matching(&a, &b, Some(1.0))).abs();
        worst = worst.max(err);
        ensure(err <= tol::WASSERSTEIN, || format!("pair {pair}: W1 off by {err}"))?;
        ensure(bottleneck_points(&a, &b) <= w1 + tol::METRIC_SLACK, || format!("pair {pair}: bottleneck > W1"))?;
    }
    let dg = |p| PersistenceDiagram::new(1, p);
    for t in 0..100 {
        let [a, b, c] = [0; 3].map(|_| dg(random_diagram(&mut rng, 8)));
        for (name, f) in [
            ("bottleneck", &|x: &PersistenceDiagram, y: &PersistenceDiagram| bottleneck(x, y).unwrap()),
            ("wasserstein", &|x: &PersistenceDiagram, y: &PersistenceDiagram| wasserstein(x, y, &cfg).unwrap()),
        ] as [(&str, &dyn Fn(&PersistenceDiagram, &PersistenceDiagram) -> f64); 2]
        {
            let ok = f(&a, &a) == 0.0
                && (f(&a, &b) - f(&b, &a)).abs() <= tol::METRIC_SLACK
                && f(&a, &c) <= f(&a, &b) + f(&b, &c) + tol::METRIC_SLACK
                && (a.points.is_empty() || f(&a, &dg(vec![])) > 0.0);
            ensure(ok, || format!("triple {t}: {name} violates a metric axiom"))?;
        }
    }
    Ok(format!("100 pairs vs enumeration (max error {worst:.1e}), 100 triples"))
}

fn homology_budget() -> Check {
    let (chunks, centroids) = surrogate_topics(&SurrogateConfig::default(), 0).map_err(|e| e.to_string())?;
    let series = build_series(&chunks, &centroids).map_err(|e| e.to_string())?;
    let last = series.last().ok_or("no snapshots")?;
    let (nv, ne) = (last.n_vertices(), last.n_edges());
    let start = Instant::now();
    let mut points = 0;
    for g in &series.snapshots {
        let (_, dm) = g.geodesic_matrix().map_err(|e| e.to_string())?;
        points += rips_persistence(&dm, 2).map_err(|e| e.to_string())?.iter().map(PersistenceDiagram::len).sum::<usize>();
    }
    let t = start.elapsed();
    ensure(series.snapshots.len() == 27 && nv == 302, || format!("surrogate has {} snapshots, {nv} vertices", series.snapshots.len()))?;
    ensure(t <= tol::HOMOLOGY_BUDGET, || format!("took {t:?}"))?;
    Ok(format!(
        "27 snapshots of a synthetic {nv}-vertex/{ne}-edge network, dims <= 2, one thread: {:.1} s ({points} points)",
        t.as_secs_f64()
    ))
}

fn blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for (k, c) in [[0.0, 0.0], [1.5, 0.0], [0.0, 1.5]].iter().enumerate() {
        for _ in 0..30 {
            pts.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
            truth.push(k);
        }
    }
    (pts, truth)
}

/// Share of points in the majority true class of their cluster.
fn purity(c: &Clustering, truth: &[usize]) -> f64 {
    let mut counts: BTreeMap<(TopicId, usize), usize> = BTreeMap::new();
    for (l, &t) in c.labels.iter().zip(truth) {
        if let Some(l) = l {
            *counts.entry((*l, t)).or_default() += 1;
        }
    }
    let mut best: BTreeMap<TopicId, usize> = BTreeMap::new();
    for ((l, _), n) in counts {
        let b = best.entry(l).or_default();
        *b = (*b).max(n);
    }
    best.values().sum::<usize>() as f64 / truth.len() as f64
}

fn partition(c: &Clustering, ids: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<TopicId, Vec<usize>> = BTreeMap::new();
    for (i, l) in c.labels.iter().enumerate() {
        if let Some(l) = l {
            groups.entry(*l).or_default().push(ids[i]);
        }
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().map(|mut g| { g.sort(); g }).collect();
    out.sort();
    out
}

fn clustering() -> Check {
    let cfg = ClusterConfig::new(3);
    let (pts, truth) = blobs(1006);
    let c = hdbscan(&pts, &cfg).map_err(|e| e.to_string())?;
    let agreement = purity(&c, &truth);
    ensure(c.n_clusters() == 3 && agreement >= tol::CLUSTER_AGREEMENT, || {
        format!("{} clusters, agreement {agreement:.3}", c.n_clusters())
    })?;
    let pair = hdbscan(&[vec![0.0, 0.0], vec![10.0, 10.0]], &cfg).map_err(|e| e.to_string())?;
    ensure(pair.labels.iter().all(Option::is_none), || "isolated pair was clustered".into())?;
    let ids: Vec<usize> = (0..pts.len()).collect();
    let base = partition(&c, &ids);
    let mut rng = ChaCha8Rng::seed_from_u64(1106);
    for s in 0..20 {
        let mut order = ids.clone();
        order.shuffle(&mut rng);
        let shuffled: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
        let p = partition(&hdbscan(&shuffled, &cfg).map_err(|e| e.to_string())?, &order);
        ensure(p == base, || format!("shuffle {s} changed the partition"))?;
    }
    Ok(format!("3 clusters at {:.1}% agreement, isolated pair is noise, 20 shuffles", 100.0 * agreement))
}

fn icc_published() -> Check {
    let [c, _, e] = PUBLISHED_COMPONENTS;
    let icc = icc_from_components(c, e, PUBLISHED_RATERS);
    ensure((icc - tol::ICC_PUBLISHED).abs() <= tol::ICC_FROM_COMPONENTS, || format!("ICC {icc:.4}"))?;
    Ok(format!("ICC from published components = {icc:.4}"))
}

fn icc_raw() -> Outcome {
    let path = match needs("ratings.csv") {
        Ok(p) => p,
        Err(o) => return o,
    };
    from((|| {
        let f = std::fs::File::open(&path).map_err(|e| e.to_string())?;
        let loaded = load_ratings(f, &RatingColumns::default()).map_err(|e| e.to_string())?;
        let vc = icc_mean_ratings(&complete_cases(&filter_naive(&loaded.records))).map_err(|e| e.to_string())?;
        let got = [vc.sigma2_chapter, vc.sigma2_subject, vc.sigma2_residual];
        for (name, (g, w)) in ["chapter", "subject", "residual"].iter().zip(got.iter().zip(PUBLISHED_COMPONENTS)) {
            ensure(((g - w) / w).abs() <= tol::COMPONENT_REL, || format!("{name} component {g:.2} vs {w}"))?;
        }
        ensure((vc.icc - tol::ICC_PUBLISHED).abs() <= tol::ICC_FROM_RATINGS, || format!("ICC {:.4}", vc.icc))?;
        Ok(format!("components {got:.2?}, ICC {:.4}", vc.icc))
    })())
}

fn stats_reproduction() -> Outcome {
    let (path, raw) = match (needs("features_raw.csv"), needs("features.csv")) {
        (Ok(p), _) => (p, true),
        (_, Ok(p)) => (p, false),
        (Err(Outcome::Blocked(_)), _) => {
            return Outcome::Blocked("shared data unavailable; set CURIOSITY_DATA_DIR to a directory with features_raw.csv or features.csv".into())
        }
        (Err(o), _) => return o,
    };
    from((|| {
        let start = Instant::now();
        let f = std::fs::File::open(&path).map_err(|e| e.to_string())?;
        let mut table = FeatureTable::read_csv(f).map_err(|e| e.to_string())?;
        if raw {
            table = table.processed(2.5, 97.5).map_err(|e| e.to_string())?;
        }
        let model = ModelConfig {
            permutations: 1000,
            ..ModelConfig::default()
        };
        let (s, _, _) = fit_models(&table, &model, 2024).map_err(|e| e.to_string())?;
        let t = start.elapsed();
        let (null, full, p) = (s.null.deviance_explained, s.full.deviance_explained, s.permutation_full.p_deviance_explained);
        ensure((null - tol::NULL_DEV_EXPLAINED).abs() <= tol::NULL_DEV_BAND, || format!("null deviance explained {null:.3}"))?;
        ensure(full - null >= tol::FULL_OVER_NULL, || format!("full {full:.3} vs null {null:.3}"))?;
        ensure(p <= tol::FULL_PERM_P, || format!("full-model permutation p = {p:.3}"))?;
        ensure(t <= tol::STATS_BUDGET, || format!("took {t:?}"))?;
        Ok(format!("null {:.1}%, full {:.1}%, permutation p {p:.3}, {:.1} s", 100.0 * null, 100.0 * full, t.as_secs_f64()))
    })())
}

fn gam_sanity() -> Check {
    let cfg = GamConfig::default();
    let x: Vec<f64> = (0..40).map(|i| i as f64 / 4.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
    let m = fit_gam(&y, &[&x], &[SmoothTermSpec::new("x")], &cfg).map_err(|e| e.to_string())?;
    ensure((m.terms[0].edf - 1.0).abs() <= tol::LINEAR_FIT && (m.deviance_explained - 1.0).abs() <= tol::LINEAR_FIT, || {
        format!("linear signal: edf {}, deviance explained {}", m.terms[0].edf, m.deviance_explained)
    })?;

    let flat = vec![7.0; 40];
    let m = fit_gam(&flat, &[&x], &[SmoothTermSpec::new("x")], &cfg).map_err(|e| e.to_string())?;
    ensure(m.deviance_explained == 0.0, || format!("constant y: {}", m.deviance_explained))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = Uniform::new(0.0, 1.0).unwrap();
    let noise = Normal::new(0.0, 0.1).unwrap();
    let xs: Vec<f64> = (0..200).map(|_| u.sample(&mut rng)).collect();
    let ys: Vec<f64> = xs.iter().map(|v| (2.0 * std::f64::consts::PI * v).sin() + noise.sample(&mut rng)).collect();
    let sine = fit_gam(&ys, &[&xs], &[SmoothTermSpec::new("x").with_basis_dim(10)], &cfg).map_err(|e| e.to_string())?;
    let (lo, hi) = tol::SINE_BAND;
    ensure((lo..=hi).contains(&sine.deviance_explained), || format!("sine: {}", sine.deviance_explained))?;

    let idx: Vec<f64> = (1..=27).map(f64::from).collect();
    let novel: Vec<f64> = (0..27).map(|i| ((i * 7) % 11) as f64).collect();
    let spec = [SmoothTermSpec::new("chapter_index"), SmoothTermSpec::new("n_novel_topics")];
    let null_noise = Normal::new(50.0, 5.0).unwrap();
    let mut above = 0;
    for rep in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep);
        let y: Vec<f64> = (0..27).map(|_| null_noise.sample(&mut rng)).collect();
        if permutation_test(&y, &[&idx, &novel], &spec, &cfg, 200, rep).map_err(|e| e.to_string())?.p_deviance_explained > 0.05 {
            above += 1;
        }
    }
    ensure(above >= 45, || format!("{above}/50 null runs with p > 0.05"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let small = Normal::new(0.0, 1.0).unwrap();
    let y: Vec<f64> = idx.iter().map(|c| 50.0 + 10.0 * (c / 4.0).sin() + small.sample(&mut rng)).collect();
    let strong = permutation_test(&y, &[&idx, &novel], &spec, &cfg, 1000, 3).map_err(|e| e.to_string())?;
    ensure(strong.deviance_explained > 0.9 && strong.p_deviance_explained <= 0.01, || {
        format!("strong signal: {} explained, p {}", strong.deviance_explained, strong.p_deviance_explained)
    })?;
    Ok(format!(
        "linear, constant, sine ({:.3}), null calibration {above}/50, strong-signal p {:.3}",
        sine.deviance_explained, strong.p_deviance_explained
    ))
}

fn pipeline_config(dir: &Path, out: &str) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed: 7,
        out_dir: dir.join(out),
        workers: 2,
        ..PipelineConfig::default()
    };
    cfg.input.novel = dir.join("novel.txt");
    cfg.input.ratings = dir.join("ratings.csv");
    cfg.embedder.dim = 256;
    cfg.reduction.target_dim = 8;
    cfg.model.permutations = 200;
    cfg.sweep.windows = vec![(5, 2), (3, 1), (7, 3)];
    cfg
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    std::fs::write(dir.join("novel.txt"), synthetic_novel(&NovelConfig::default(), 21)).unwrap();
    std::fs::write(dir.join("ratings.csv"), synthetic_ratings(27, 20, 15, 22)).unwrap();
    let (a, b) = (pipeline_config(dir, "a"), pipeline_config(dir, "b"));
    for cfg in [&a, &b] {
        run_pipeline(cfg).map_err(|e| e.to_string())?;
        run_sweep(cfg).map_err(|e| e.to_string())?;
    }
    let files = ["features.csv", "features_raw.csv", "fit_summary.json", SWEEP_TABLE];
    for f in files {
        let (x, y) = (std::fs::read(a.out_dir.join(f)), std::fs::read(b.out_dir.join(f)));
        ensure(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), || format!("{f} differs between runs"))?;
    }
    Ok(format!("two runs byte-identical on {}", files.join(", ")))
}

fn closed_form_spans(n: usize, w: usize, o: usize) -> usize {
    match n {
        0 => 0,
        n if n <= w => 1,
        n => 1 + (n - w).div_ceil(w - o),
    }
}

fn segmentation() -> Check {
    let mut checked = 0;
    for w in 1..=10 {
        for o in 0..w {
            let cfg = SegmenterConfig::new(w, o).map_err(|e| e.to_string())?;
            for n in 0..=60 {
                let spans = window_spans(n, &cfg);
                let want = closed_form_spans(n, w, o);
                ensure(spans.len() == want, || format!("N={n} w={w} o={o}: {} spans, expected {want}", spans.len()))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (N, w, o) combinations match the closed form"))
}

fn corpus_scale() -> Outcome {
    let path = match needs("novel.txt") {
        Ok(p) => p,
        Err(o) => return o,
    };
    from((|| {
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let n = segment_novel(&text, &CleanConfig::default(), &SegmenterConfig::default()).map_err(|e| e.to_string())?.len();
        let rel = (n as f64 - tol::CORPUS_SEGMENTS) / tol::CORPUS_SEGMENTS;
        ensure(rel.abs() <= tol::CORPUS_REL, || format!("{n} segments ({:+.1}%)", 100.0 * rel))?;
        Ok(format!("{n} segments ({:+.1}%)", 100.0 * rel))
    })())
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1", "persistence oracle equivalence", Box::new(|| from(persistence_oracle()))),
        ("2", "analytic topology cases", Box::new(|| from(analytic_cases()))),
        ("3", "bottleneck stability", Box::new(|| from(stability()))),
        ("4", "diagram-distance correctness", Box::new(|| from(diagram_distances()))),
        ("5", "homology performance budget", Box::new(|| from(homology_budget()))),
        ("6", "clustering recovery", Box::new(|| from(clustering()))),
        ("7a", "ICC from published components", Box::new(|| from(icc_published()))),
        ("7b", "variance components from raw ratings", Box::new(icc_raw)),
        ("8", "statistical-pipeline reproduction", Box::new(stats_reproduction)),
        ("9", "GAM sanity suite", Box::new(|| from(gam_sanity()))),
        ("10", "end-to-end determinism", Box::new(|| from(determinism()))),
        ("11a", "segmentation arithmetic", Box::new(|| from(segmentation()))),
        ("11b", "corpus-scale segment count", Box::new(corpus_scale)),
    ];
    let (mut failed, mut blocked) = (0, 0);
    let total = Instant::now();
    for (id, name, run) in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Outcome::Fail("panicked".into()));
        let secs = Duration::as_secs_f64(&start.elapsed());
        match outcome {
            Outcome::Pass(d) => println!("criterion {id:>3}: PASS  {name}: {d} [{secs:.1} s]"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {id:>3}: FAIL  {name}: {d} [{secs:.1} s]");
            }
            Outcome::Blocked(d) => {
                blocked += 1;
                println!("criterion {id:>3}: FAIL  {name}: [blocked] {d}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed, {blocked} blocked on missing data ({:.1} s)",
        criteria.len() - failed - blocked,
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
