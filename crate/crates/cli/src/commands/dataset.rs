use std::path::PathBuf;

use artkit::ingest::{bundle_dirs, make_dataset, DatasetConfig, ObjectBundle, StateSampler};
use artkit::Exec;
use clap::Args;

use super::write_file;
use crate::error::{CliError, CliResult};
use crate::PipelineConfig;

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    /// Directory of object bundles.
    pub bundles: PathBuf,
    /// Output JSON-lines file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub rotations: usize,
    #[arg(long, default_value_t = 5)]
    pub poses: usize,
    /// Lower end of the sampled fraction of each joint range.
    #[arg(long, default_value_t = 0.25)]
    pub open_min: f64,
    #[arg(long, default_value_t = 0.75)]
    pub open_max: f64,
}

pub fn run(args: &GenDatasetArgs, cfg: &PipelineConfig) -> CliResult<()> {
    let sampler = StateSampler {
        open_fraction: (args.open_min, args.open_max),
    };
    sampler.validate().map_err(CliError::input)?;
    let dirs = bundle_dirs(&args.bundles).map_err(CliError::input)?;
    if dirs.is_empty() {
        return Err(CliError::Input(format!("no object bundles under {}", args.bundles.display())));
    }
    let objects = Exec::default()
        .map_slice(&dirs, |d| ObjectBundle::load(d))
        .into_iter()
        .collect::<artkit::Result<Vec<_>>>()
        .map_err(CliError::input)?;
    let config = DatasetConfig {
        n_rotations: args.rotations,
        n_poses: args.poses,
        sampler,
    };
    let ds = make_dataset(&objects, &config, cfg.seed);
    write_file(&args.out, ds.to_jsonl())?;
    let skipped = ds.diagnostics.iter().filter(|d| d.skipped).count();
    if !ds.diagnostics.is_empty() {
        let path = args.out.with_extension("diagnostics.jsonl");
        let text: String = ds
            .diagnostics
            .iter()
            .map(|d| serde_json::to_string(d).expect("diagnostic serializes") + "\n")
            .collect();
        write_file(&path, text)?;
        eprintln!("{} diagnostics ({skipped} skipped samples) in {}", ds.diagnostics.len(), path.display());
    }
    println!("{} samples from {} objects -> {}", ds.samples.len(), objects.len(), args.out.display());
    Ok(())
}
