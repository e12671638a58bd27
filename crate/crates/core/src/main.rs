use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fewshot_core::runner::{
    run_experiment, run_grid, write_aggregate_csv, write_text, ExperimentConfig, GridReport, GridSpec, ReportFormat,
};
use fewshot_core::sampler::{sample_episodes, EpisodeConfig, DEFAULT_Q_QUERY};
use fewshot_core::store::{generate_synthetic, DataFormat, SyntheticSpec};
use fewshot_core::EmbeddingDataset;

#[derive(Parser)]
#[command(
    name = "fewshot",
    version,
    about = "Episodic few-shot evaluation over embedding files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(RunArgs),
    /// Run an ablation grid file.
    Grid(RunArgs),
    /// Write a synthetic embedding dataset.
    Gen(GenArgs),
    /// Summarize a dataset and optionally dump an episode manifest.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file (flat key = value document).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set k_shot=5`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long)]
    format: Option<ReportFormat>,
}

impl RunArgs {
    fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        for pair in &self.overrides {
            config.set_pair(pair)?;
        }
        if let Some(seed) = self.seed {
            config.episode.seed = seed;
        }
        if let Some(n) = self.episodes {
            config.episodes = n;
        }
        if let Some(out) = &self.output {
            config.output = Some(out.clone());
        }
        if let Some(f) = self.format {
            config.report_format = f;
        }
        Ok(())
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(short, long)]
    out: PathBuf,
    /// csv or binary; defaults from the file extension.
    #[arg(long)]
    format: Option<DataFormat>,
    #[arg(long, default_value_t = 5)]
    n_classes: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 40)]
    groups_per_class: usize,
    #[arg(long, default_value_t = 10.0)]
    center_norm: f64,
    #[arg(long, default_value_t = 1.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Augmented copies per group.
    #[arg(long, default_value_t = 0)]
    aug_copies: usize,
    #[arg(long, default_value_t = 0.0)]
    aug_sigma: f64,
    /// Leading coordinates whose noise is scaled by --nuisance-scale.
    #[arg(long, default_value_t = 0)]
    nuisance_dims: usize,
    #[arg(long, default_value_t = 1.0)]
    nuisance_scale: f64,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(short, long)]
    data: PathBuf,
    #[arg(long)]
    format: Option<DataFormat>,
    /// Sample this many episodes and write their manifest.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, default_value_t = 2)]
    n_way: usize,
    #[arg(long, default_value_t = 1)]
    k_shot: usize,
    #[arg(long, default_value_t = DEFAULT_Q_QUERY)]
    q_query: usize,
    #[arg(long)]
    aug_expand: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Manifest destination; stdout when omitted.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    args.apply(&mut config)?;
    let report = run_experiment(&config)?;
    eprintln!(
        "{} episodes: accuracy {:.4} ± {:.4}, auroc {:.4} ± {:.4}",
        report.accuracy.episodes,
        report.accuracy.mean,
        report.accuracy.ci95_halfwidth,
        report.auroc.mean,
        report.auroc.ci95_halfwidth
    );
    let text = match config.report_format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            write_aggregate_csv(std::slice::from_ref(&report), &mut buf)?;
            String::from_utf8(buf)?
        }
    };
    emit(config.output.as_deref(), &text)
}

fn cmd_grid(args: RunArgs) -> Result<()> {
    let Some(path) = &args.config else {
        bail!("grid needs --config <grid file>");
    };
    let mut spec = GridSpec::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    args.apply(&mut spec.base)?;
    let configs = spec.expand()?;
    let reports = run_grid(&configs)?;
    let grid = GridReport::new(reports);
    eprint!("{}", grid.table.render());
    let text = match spec.base.report_format {
        ReportFormat::Json => grid.to_json()?,
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            grid.table.write_csv(&mut buf)?;
            String::from_utf8(buf)?
        }
    };
    emit(spec.base.output.as_deref(), &text)
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_classes: args.n_classes,
        dim: args.dim,
        groups_per_class: args.groups_per_class,
        class_center_norm: args.center_norm,
        noise_sigma: args.noise_sigma,
        seed: args.seed,
        aug_copies: args.aug_copies,
        aug_sigma: args.aug_sigma,
        nuisance_dims: args.nuisance_dims,
        nuisance_scale: args.nuisance_scale,
    };
    let dataset: EmbeddingDataset = generate_synthetic(&spec)?;
    let format = args.format.unwrap_or_else(|| DataFormat::from_path(&args.out));
    dataset.save(&args.out, format)?;
    eprintln!("wrote {} records ({format}) to {}", dataset.len(), args.out.display());
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<()> {
    let format = args.format.unwrap_or_else(|| DataFormat::from_path(&args.data));
    let dataset =
        EmbeddingDataset::load(&args.data, format).with_context(|| format!("loading {}", args.data.display()))?;
    let summary = serde_json::json!({
        "records": dataset.len(),
        "dim": dataset.dim(),
        "groups": dataset.group_count(),
        "classes": dataset
            .class_index()
            .iter()
            .map(|(c, groups)| (c.to_string(), serde_json::Value::from(groups.len())))
            .collect::<serde_json::Map<_, _>>(),
    });
    eprintln!("{}", serde_json::to_string_pretty(&summary)?);

    if let Some(count) = args.episodes {
        let config = EpisodeConfig {
            n_way: args.n_way,
            k_shot: args.k_shot,
            q_query: args.q_query,
            aug_expand: args.aug_expand,
            seed: args.seed,
        };
        let manifests: Vec<_> = sample_episodes(&dataset, &config, count)?
            .iter()
            .map(|e| e.manifest())
            .collect();
        emit(
            args.manifest.as_deref(),
            &(serde_json::to_string_pretty(&manifests)? + "\n"),
        )?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}
