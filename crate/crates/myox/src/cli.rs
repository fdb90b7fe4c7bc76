//! Command-line interface: `phantom`, `extract`, `crossval`, `train`,
//! `report`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. A TOML
//! configuration file can seed any run via `--config`; explicit flags
//! override file values, and built-in defaults fill the rest. Environment
//! variables are never consulted.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use myox_core::nn::Variant;
use serde::Deserialize;

use crate::phantom::{synth_dataset, PhantomConfig};
use crate::pipeline::{run_crossval, run_extract, run_train, ExperimentConfig};
use crate::report::{read_report, render_delimited, render_text};

#[derive(Parser)]
#[command(
    name = "myox",
    version,
    about = "Muscle-ROI severity grading: texture features, three classifier variants, subject-level cross-validation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled phantom dataset
    Phantom(PhantomArgs),
    /// Extract the 355-feature table for every manifest ROI
    Extract(ExtractArgs),
    /// Leave-one-subject-out cross-validation of one variant
    Crossval(RunArgs),
    /// Train one model on the full manifest and store it
    Train(RunArgs),
    /// Render a results file as tables
    Report(ReportArgs),
}

#[derive(Args)]
struct PhantomArgs {
    /// Output directory for images, masks and manifest.csv
    #[arg(long)]
    out: PathBuf,
    /// Total number of subjects (split ~evenly across the three grades)
    #[arg(long, default_value_t = 26)]
    subjects: usize,
    /// Slices per subject
    #[arg(long, default_value_t = 8)]
    slices: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ExtractArgs {
    /// Manifest CSV
    #[arg(long)]
    manifest: PathBuf,
    /// Output feature table CSV
    #[arg(long)]
    out: PathBuf,
    /// Gray-level count for co-occurrence / run-length quantization
    #[arg(long, default_value_t = 64)]
    n_levels: usize,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Manifest CSV
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Model variant: convnet | texture | hybrid
    #[arg(long)]
    variant: Option<String>,
    /// Output directory (reports and the model store)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feature table (required for texture and hybrid)
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// L2 regularization strength on weight matrices
    #[arg(long)]
    alpha: Option<f64>,
    /// Filter count of the trailing 1x1 convolution
    #[arg(long)]
    c1x1: Option<usize>,
    /// Gray-level count recorded for provenance
    #[arg(long)]
    n_levels: Option<usize>,
    /// Disable training-time augmentation
    #[arg(long)]
    no_augment: bool,
    /// Worker threads (0 = all cores); results are identical for any value
    #[arg(long)]
    jobs: Option<usize>,
    /// TOML configuration file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Results JSON produced by crossval/train
    #[arg(long)]
    results: PathBuf,
    /// Output format
    #[arg(long, default_value = "plain", value_parser = ["plain", "delimited"])]
    format: String,
}

/// Optional keys of the TOML run configuration; identical names to the
/// CLI flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    manifest: Option<PathBuf>,
    variant: Option<String>,
    out: Option<PathBuf>,
    features: Option<PathBuf>,
    seed: Option<u64>,
    epochs: Option<u32>,
    batch_size: Option<usize>,
    alpha: Option<f64>,
    c1x1: Option<usize>,
    n_levels: Option<usize>,
    augment: Option<bool>,
    jobs: Option<usize>,
}

fn build_experiment_config(args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
            toml::from_str(&text)
                .map_err(|e| anyhow::anyhow!("bad config {}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let manifest = args
        .manifest
        .clone()
        .or(file.manifest)
        .ok_or_else(|| anyhow::anyhow!("--manifest is required (flag or config file)"))?;
    let variant_name = args
        .variant
        .clone()
        .or(file.variant)
        .ok_or_else(|| anyhow::anyhow!("--variant is required (convnet | texture | hybrid)"))?;
    let variant = Variant::from_name(&variant_name)
        .ok_or_else(|| anyhow::anyhow!("unknown variant {variant_name:?}"))?;
    let out = args
        .out
        .clone()
        .or(file.out)
        .ok_or_else(|| anyhow::anyhow!("--out is required (flag or config file)"))?;

    let mut config = ExperimentConfig::new(manifest, variant, out);
    config.features = args.features.clone().or(file.features);
    if let Some(seed) = args.seed.or(file.seed) {
        config.seed = seed;
    }
    if let Some(epochs) = args.epochs.or(file.epochs) {
        config.epochs = epochs;
    }
    if let Some(batch) = args.batch_size.or(file.batch_size) {
        config.batch_size = batch;
    }
    if let Some(alpha) = args.alpha.or(file.alpha) {
        config.l2_alpha = alpha;
    }
    if let Some(c1x1) = args.c1x1.or(file.c1x1) {
        config.c1x1 = c1x1;
    }
    if let Some(n_levels) = args.n_levels.or(file.n_levels) {
        config.n_levels = n_levels;
    }
    config.augment = if args.no_augment {
        false
    } else {
        file.augment.unwrap_or(true)
    };
    if let Some(jobs) = args.jobs.or(file.jobs) {
        config.jobs = jobs;
    }
    Ok(config)
}

fn cmd_phantom(args: &PhantomArgs) -> anyhow::Result<()> {
    let config = PhantomConfig {
        subjects: args.subjects,
        slices_per_subject: args.slices,
        seed: args.seed,
    };
    let summary = synth_dataset(&config, &args.out)?;
    println!(
        "phantom dataset: {} subjects, {} ROIs (healthy {}, mild {}, moderate_severe {})",
        summary.subjects,
        summary.n_records,
        summary.per_class[0],
        summary.per_class[1],
        summary.per_class[2]
    );
    println!("manifest: {}", summary.manifest_path.display());
    Ok(())
}

fn cmd_extract(args: &ExtractArgs) -> anyhow::Result<()> {
    let (rows, warned) = run_extract(&args.manifest, &args.out, args.n_levels, args.jobs)?;
    println!(
        "extracted {rows} ROIs -> {} ({warned} with family warnings)",
        args.out.display()
    );
    Ok(())
}

fn cmd_crossval(args: &RunArgs) -> anyhow::Result<()> {
    let config = build_experiment_config(args)?;
    let report = run_crossval(&config)?;
    print!("{}", render_text(&report));
    println!("results: {}", config.results_json_path().display());
    Ok(())
}

fn cmd_train(args: &RunArgs) -> anyhow::Result<()> {
    let config = build_experiment_config(args)?;
    let report = run_train(&config)?;
    print!("{}", render_text(&report));
    println!(
        "model stored under {}",
        config.model_store().path_for(config.variant.name(), "full").display()
    );
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> anyhow::Result<()> {
    let report = read_report(&args.results)?;
    match args.format.as_str() {
        "delimited" => print!("{}", render_delimited(&report)),
        _ => print!("{}", render_text(&report)),
    }
    Ok(())
}

/// Parse arguments and dispatch. Usage errors exit 2 (clap's default);
/// runtime failures print to stderr and exit 1.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Phantom(args) => cmd_phantom(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Crossval(args) => cmd_crossval(args),
        Command::Train(args) => cmd_train(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
