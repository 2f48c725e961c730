use std::path::{Path, PathBuf};

use infogap_core::pipeline::{regenerate_figures, run_pipeline, run_sweep, run_until, FitSummary, PipelineConfig, Stage, FIGURES, SWEEP_TABLE};
use infogap_core::embed::{EmbedderConfig, EmbedderKind};
use infogap_core::synthetic::{synthetic_novel, synthetic_ratings, NovelConfig};
use infogap_core::Error;

fn fixture(dir: &Path) -> PipelineConfig {
    let novel = dir.join("novel.txt");
    let ratings = dir.join("ratings.csv");
    std::fs::write(&novel, synthetic_novel(&NovelConfig::default(), 11)).unwrap();
    std::fs::write(&ratings, synthetic_ratings(27, 12, 9, 5)).unwrap();
    let mut cfg = PipelineConfig {
        seed: 42,
        out_dir: dir.join("out"),
        workers: 2,
        ..PipelineConfig::default()
    };
    cfg.input.novel = novel;
    cfg.input.ratings = ratings;
    cfg.embedder.dim = 256;
    cfg.reduction.target_dim = 8;
    cfg.model.permutations = 100;
    cfg
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn full_run_is_deterministic_and_resumable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture(tmp.path());
    let first = run_pipeline(&cfg).unwrap();
    assert_eq!(first.ran, Stage::ALL.to_vec());

    let out = &cfg.out_dir;
    let fit: FitSummary = serde_json::from_slice(&read(out, "fit_summary.json")).unwrap();
    assert_eq!(fit.n, 27);
    assert!(fit.full.deviance_explained >= fit.null.deviance_explained - 1e-9);
    let models: serde_json::Value = serde_json::from_slice(&read(out, "models.json")).unwrap();
    assert!(models["null"]["coefficients"].is_array() && models["full"]["coefficients"].is_array());
    let report = String::from_utf8(read(out, "report.md")).unwrap();
    assert!(report.contains("| Null model (control variables only) |"));
    assert!(report.contains("| Full model (controls + topological features) |"));
    for (stem, _, _) in FIGURES {
        assert!(out.join(format!("figures/{stem}.svg")).is_file(), "{stem}");
    }

    // Nothing changed: every stage is skipped.
    let second = run_pipeline(&cfg).unwrap();
    assert!(second.ran.is_empty());
    assert_eq!(second.skipped.len(), Stage::ALL.len());

    // Losing a mid-pipeline artifact reruns that stage and everything after it.
    let features = read(out, "features.csv");
    let summary = read(out, "fit_summary.json");
    std::fs::remove_file(out.join("diagrams.csv")).unwrap();
    let third = run_pipeline(&cfg).unwrap();
    assert_eq!(third.skipped, Stage::ALL[..5].to_vec());
    assert_eq!(third.ran, Stage::ALL[5..].to_vec());
    assert_eq!(read(out, "features.csv"), features);
    assert_eq!(read(out, "fit_summary.json"), summary);

    // An independent run with more workers gives identical bytes.
    let mut other = cfg.clone();
    other.out_dir = tmp.path().join("again");
    other.workers = 4;
    run_pipeline(&other).unwrap();
    for name in ["segments.csv", "chunk_topics.csv", "diagrams.csv", "features.csv", "fit_summary.json", "report.md"] {
        assert_eq!(read(&other.out_dir, name), read(out, name), "{name}");
    }
}

#[test]
fn config_change_reruns_downstream_only() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = fixture(tmp.path());
    run_until(&cfg, Stage::Features).unwrap();
    cfg.features.winsor_hi = 95.0;
    let again = run_until(&cfg, Stage::Features).unwrap();
    assert_eq!(again.ran, vec![Stage::Features]);
}

#[test]
fn figures_regenerate_from_data_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture(tmp.path());
    run_pipeline(&cfg).unwrap();
    let fig_dir = cfg.out_dir.join("figures");
    let svgs: Vec<PathBuf> = walk(&fig_dir).into_iter().filter(|p| p.extension().unwrap() == "svg").collect();
    let before: Vec<Vec<u8>> = svgs.iter().map(|p| std::fs::read(p).unwrap()).collect();
    for p in &svgs {
        std::fs::remove_file(p).unwrap();
    }
    let written = regenerate_figures(&cfg.out_dir).unwrap();
    assert_eq!(written.len(), svgs.len());
    for (p, b) in svgs.iter().zip(&before) {
        assert_eq!(&std::fs::read(p).unwrap(), b, "{}", p.display());
    }
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn missing_input_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = fixture(tmp.path());
    cfg.input.ratings = tmp.path().join("absent.csv");
    assert!(matches!(run_pipeline(&cfg), Err(Error::Config(_))));
}

#[test]
fn malformed_ratings_fail_the_features_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture(tmp.path());
    std::fs::write(&cfg.input.ratings, "who,what\n1,2\n").unwrap();
    match run_pipeline(&cfg) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "features"),
        other => panic!("expected a features failure, got {other:?}"),
    }
}

#[test]
fn sweep_is_deterministic_and_survives_failing_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = fixture(tmp.path());
    // The remote cells fail at the embedding stage: no credentials.
    let remote = EmbedderConfig {
        kind: EmbedderKind::Remote,
        endpoint_url: Some("http://127.0.0.1:9/embeddings".into()),
        api_key_env: "INFOGAP_TEST_UNSET_KEY".into(),
        ..EmbedderConfig::default()
    };
    cfg.sweep.embedders = vec![cfg.embedder.clone(), remote];
    cfg.sweep.windows = vec![(5, 2), (3, 1)];
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows[..2] {
        assert_eq!(r.status, "ok");
        assert!(r.n_topics.unwrap() >= 3 && r.full_deviance_explained.is_some());
    }
    assert_eq!(rows[1].min_cluster_size, 4);
    for r in &rows[2..] {
        assert!(r.status.contains("INFOGAP_TEST_UNSET_KEY"), "{}", r.status);
        assert!(r.n_topics.is_none() && r.full_deviance_explained.is_none());
    }
    let table = read(&cfg.out_dir, SWEEP_TABLE);

    let mut again = cfg.clone();
    again.out_dir = tmp.path().join("sweep2");
    again.workers = 1;
    run_sweep(&again).unwrap();
    assert_eq!(read(&again.out_dir, SWEEP_TABLE), table);
}
