//! Batch pipeline around the `artkit` library: ingestion, dataset
//! generation, reconstruction, evaluation and export.

pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod predictor;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "artkit", version, about = "Articulated-object reconstruction pipeline")]
pub struct Cli {
    /// TOML configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Root seed; every stage derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse URDF object directories into object bundles.
    Ingest(commands::ingest::IngestArgs),
    /// Build the prompt/completion dataset from object bundles.
    GenDataset(commands::dataset::GenDatasetArgs),
    /// Views to parts, meshes, joints and exported models.
    Reconstruct(commands::reconstruct::ReconstructArgs),
    /// Score predicted bundles against ground truth.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Execute an .artcode file and export posed geometry.
    Export(commands::export::ExportArgs),
    /// Fit an oriented box to a point cloud or mesh.
    FitObb(commands::tools::FitObbArgs),
    /// Print the box-relative code of an object bundle.
    Quantize(commands::tools::QuantizeArgs),
    /// Complete a partial point cloud into an occupancy grid and mesh.
    Complete(commands::tools::CompleteArgs),
    /// Write synthetic cabinet fixtures (bundles, views, URDF).
    Fixtures(commands::fixtures::FixturesArgs),
}

/// Config file, then flag overrides, then validation.
pub fn resolve_config(cli: &Cli) -> CliResult<PipelineConfig> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = resolve_config(&cli)?;
    #[cfg(feature = "parallel")]
    if let Some(n) = cfg.jobs {
        // a second call in one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest::run(&a, &cfg),
        Command::GenDataset(a) => commands::dataset::run(&a, &cfg),
        Command::Reconstruct(a) => commands::reconstruct::run(&a, &cfg),
        Command::Evaluate(a) => commands::evaluate::run(&a, &cfg),
        Command::Export(a) => commands::export::run(&a, &cfg),
        Command::FitObb(a) => commands::tools::fit_obb(&a),
        Command::Quantize(a) => commands::tools::quantize(&a),
        Command::Complete(a) => commands::tools::complete(&a, &cfg),
        Command::Fixtures(a) => commands::fixtures::run(&a, &cfg),
    }
}
