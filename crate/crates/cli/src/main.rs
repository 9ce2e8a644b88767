//! `fedopt`: generate synthetic federated datasets, run convergence
//! experiments, plot them, and summarize datasets.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use fedopt::harness::{emit_plot, run_experiment, DataSource, ExperimentConfig, Problem, RunOptions};
use fedopt::metrics::CSV_HEADER;
use fedopt::synth::{generate, summarize, DatasetSummary, GenConfig};

#[derive(Parser)]
#[command(name = "fedopt", version, about = "Federated optimization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic partitioned dataset.
    Generate(GenerateArgs),
    /// Run an experiment and write per-algorithm CSVs.
    Run(RunArgs),
    /// Draw metrics CSVs as a two-panel SVG.
    Plot(PlotArgs),
    /// Print shape statistics of a dataset as JSON.
    Stats(StatsArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator TOML, or an experiment TOML with a generated data source.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write wall_ms = 0 so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Metrics CSVs, or directories whose metrics CSVs are all plotted.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Experiment TOML whose data source is summarized.
    #[arg(long, conflicts_with_all = ["data", "train"])]
    config: Option<PathBuf>,
    /// Directory written by `generate`.
    #[arg(long, conflicts_with = "train")]
    data: Option<PathBuf>,
    #[arg(long, requires = "partition")]
    train: Option<PathBuf>,
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Stats(a) => cmd_stats(a),
    }
}

fn read_generator_config(path: &Path) -> Result<GenConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(exp) = ExperimentConfig::from_toml_str(&text) {
        return match exp.data {
            DataSource::Generate(g) => Ok(GenConfig { seed: exp.seed, ..g }),
            DataSource::Load { .. } => bail!("{} loads its data instead of generating it", path.display()),
        };
    }
    GenConfig::from_toml_str(&text).with_context(|| format!("parsing generator config {}", path.display()))
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => read_generator_config(p)?,
        None => GenConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let data = generate(&cfg)?;
    data.save(&a.out)?;
    let s = summarize(&data)?;
    info!(
        "wrote {} training / {} test examples on {} nodes to {}",
        s.num_examples,
        data.test.num_examples(),
        s.num_nodes,
        a.out.display()
    );
    Ok(())
}

fn load_experiment(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = load_experiment(&a.config, a.seed)?;
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    let result = run_experiment(&cfg, RunOptions { timing: !a.no_timing })?;
    result.write(&cfg.output_dir)?;
    for run in &result.runs {
        let best = run.best();
        println!(
            "{:<20} {:<24} final suboptimality {:.3e}{}",
            run.id,
            best.setting,
            best.final_suboptimality(),
            if best.diverged { " (diverged)" } else { "" }
        );
    }
    info!("results in {}", cfg.output_dir.display());
    Ok(())
}

fn metrics_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if !input.is_dir() {
            files.push(input.clone());
            continue;
        }
        let mut found: Vec<PathBuf> = fs::read_dir(input)
            .with_context(|| format!("listing {}", input.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .filter(|p| {
                fs::read_to_string(p).is_ok_and(|t| t.lines().next() == Some(CSV_HEADER))
            })
            .collect();
        found.sort();
        files.extend(found);
    }
    if files.is_empty() {
        bail!("no metrics CSVs found");
    }
    Ok(files)
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let files = metrics_files(&a.inputs)?;
    emit_plot(&files, &a.out)?;
    info!("plotted {} files to {}", files.len(), a.out.display());
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let problem = if let Some(path) = &a.config {
        Problem::load(&load_experiment(path, a.seed)?)?
    } else {
        let (train, partition) = match (&a.data, &a.train, &a.partition) {
            (Some(dir), _, _) => (dir.join("train.libsvm"), dir.join("partition.txt")),
            (None, Some(t), Some(p)) => (t.clone(), p.clone()),
            _ => bail!("pass --config, --data, or --train with --partition"),
        };
        let mut cfg = ExperimentConfig::desk_default(0);
        cfg.data = DataSource::Load {
            train,
            partition,
            test: None,
            num_features: None,
        };
        Problem::load(&cfg)?
    };
    let summary = DatasetSummary::compute(&problem.train, &problem.partition)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
