use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use infogap_core::pipeline::{regenerate_figures, run_sweep, run_until, PipelineConfig, RunSummary, Stage, SWEEP_TABLE};
use infogap_core::synthetic::{synthetic_novel, synthetic_ratings, NovelConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_STAGE: u8 = 3;

/// Topic-network topology and reader curiosity, from raw text to fitted models.
#[derive(Parser)]
#[command(name = "infogap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); overrides `workers`.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Clean the novel and cut it into sentence windows.
    Segment(Common),
    /// Embed every segment.
    Embed(Common),
    /// Reduce embedding dimension.
    Reduce(Common),
    /// Cluster segments into topics.
    Cluster(Common),
    /// Build the cumulative topic network.
    Network(Common),
    /// Persistent homology of every network snapshot.
    Homology(Common),
    /// Distances between consecutive persistence diagrams.
    Distances(Common),
    /// Join curiosity, topic and topology features.
    Features(Common),
    /// Fit the null and full models.
    Fit(Common),
    /// Write the report and figures.
    Report(Common),
    /// Run every stage.
    Run(Common),
    /// Run the sensitivity grid.
    Sweep(Common),
    /// Re-render figure SVGs from their data files.
    Figures {
        /// Output directory of a finished run.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic novel, ratings table and config to a directory.
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Config(anyhow::Error),
    Stage(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        match e.downcast_ref::<infogap_core::Error>() {
            Some(inner) if inner.is_config() => Failure::Config(e),
            _ => Failure::Stage(e),
        }
    }
}

fn load(c: &Common) -> std::result::Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::load(&c.config)
        .with_context(|| format!("loading {}", c.config.display()))
        .map_err(Failure::Config)?;
    if let Some(out) = &c.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn print_summary(s: &RunSummary) {
    let names = |v: &[Stage]| v.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ");
    if !s.skipped.is_empty() {
        println!("up to date: {}", names(&s.skipped));
    }
    if !s.ran.is_empty() {
        println!("ran: {}", names(&s.ran));
    }
    println!("artifacts: {}", s.out_dir.display());
}

fn demo(out: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cfg = NovelConfig::default();
    std::fs::write(out.join("novel.txt"), synthetic_novel(&cfg, seed))?;
    std::fs::write(
        out.join("ratings.csv"),
        synthetic_ratings(cfg.n_chapters, 60, 49, seed.wrapping_add(1)),
    )?;
    let config = format!(
        "seed = {seed}\nout_dir = \"out\"\nworkers = 0\n\n[input]\nnovel = \"novel.txt\"\nratings = \"ratings.csv\"\n\n[embedder]\nkind = \"deterministic\"\ndim = 512\n\n[reduction]\ntarget_dim = 16\n\n[model]\npermutations = 1000\n"
    );
    std::fs::write(out.join("config.toml"), config)?;
    println!("wrote novel.txt, ratings.csv and config.toml to {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let stage = |c: &Common, last: Stage| -> std::result::Result<(), Failure> {
        let cfg = load(c)?;
        print_summary(&run_until(&cfg, last)?);
        Ok(())
    };
    match &cli.command {
        Command::Segment(c) => stage(c, Stage::Segment),
        Command::Embed(c) => stage(c, Stage::Embed),
        Command::Reduce(c) => stage(c, Stage::Reduce),
        Command::Cluster(c) => stage(c, Stage::Cluster),
        Command::Network(c) => stage(c, Stage::Network),
        Command::Homology(c) => stage(c, Stage::Homology),
        Command::Distances(c) => stage(c, Stage::Distances),
        Command::Features(c) => stage(c, Stage::Features),
        Command::Fit(c) => stage(c, Stage::Fit),
        Command::Report(c) | Command::Run(c) => stage(c, Stage::Report),
        Command::Sweep(c) => {
            let cfg = load(c)?;
            let rows = run_sweep(&cfg)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "{} cells, {failed} failed; table: {}",
                rows.len(),
                cfg.out_dir.join(SWEEP_TABLE).display()
            );
            Ok(())
        }
        Command::Figures { out } => {
            let written = regenerate_figures(out)?;
            println!("rendered {} figures", written.len());
            Ok(())
        }
        Command::Demo { out, seed } => demo(out, *seed).map_err(Failure::Stage),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
