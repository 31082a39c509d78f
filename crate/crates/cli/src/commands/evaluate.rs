use std::path::PathBuf;

use artkit::eval::{evaluate_object, EvalReport, ReportMetadata, ReportSet};
use artkit::ingest::{bundle_dirs, ObjectBundle};
use clap::Args;

use super::write_file;
use crate::error::{CliError, CliResult};
use crate::PipelineConfig;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted bundle, or directory of bundles named by object id.
    pub pred: PathBuf,
    /// Ground-truth bundle, or directory of bundles.
    pub gt: PathBuf,
    /// Output directory for `report.json` and `report.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Surface samples per Chamfer term.
    #[arg(long)]
    pub samples: Option<usize>,
}

pub fn run(args: &EvaluateArgs, cfg: &PipelineConfig) -> CliResult<()> {
    let samples = args.samples.unwrap_or(cfg.samples);
    if samples == 0 {
        return Err(CliError::Input("[InvalidValue] --samples must be positive".into()));
    }
    // (id, pred dir, gt dir)
    let pairs: Vec<(String, PathBuf, PathBuf)> = if args.gt.join("object.json").is_file() {
        let gt = ObjectBundle::load(&args.gt).map_err(CliError::input)?;
        vec![(gt.id, args.pred.clone(), args.gt.clone())]
    } else {
        bundle_dirs(&args.gt)
            .map_err(CliError::input)?
            .into_iter()
            .map(|g| {
                let id = g.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (id.clone(), args.pred.join(&id), g)
            })
            .collect()
    };
    if pairs.is_empty() {
        return Err(CliError::Input(format!("no ground-truth bundles under {}", args.gt.display())));
    }
    let mut reports = Vec::with_capacity(pairs.len());
    for (id, pred_dir, gt_dir) in &pairs {
        let gt = ObjectBundle::load(gt_dir).map_err(CliError::input)?;
        let report = if pred_dir.join("object.json").is_file() {
            let pred = ObjectBundle::load(pred_dir).map_err(CliError::input)?;
            evaluate_object(id, &pred.object, &gt.object, samples, cfg.seed).map_err(CliError::stage("evaluate"))?
        } else {
            eprintln!("{id}: no prediction, scored as a full miss");
            EvalReport::missing_prediction(id, &gt.object)
        };
        reports.push(report);
    }
    let set = ReportSet::new(ReportMetadata::new(samples, cfg.seed), reports).map_err(CliError::stage("evaluate"))?;
    write_file(&args.out.join("report.json"), set.to_json())?;
    let csv = set.to_csv();
    write_file(&args.out.join("report.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}
