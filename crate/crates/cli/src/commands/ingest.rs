use std::path::PathBuf;

use artkit::ingest::{pose_object, urdf_dirs, ObjectBundle, StateSampler, URDF_FILE};
use artkit::{seed, Exec};
use clap::Args;

use crate::error::{CliError, CliResult};
use crate::PipelineConfig;

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// An object directory (`mobility.urdf` + meshes) or a directory of them.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Write each object partially opened (seeded) instead of at rest.
    #[arg(long)]
    pub pose: bool,
}

pub fn run(args: &IngestArgs, cfg: &PipelineConfig) -> CliResult<()> {
    let dirs = if args.input.join(URDF_FILE).is_file() {
        vec![args.input.clone()]
    } else {
        urdf_dirs(&args.input).map_err(CliError::input)?
    };
    if dirs.is_empty() {
        return Err(CliError::Input(format!("no {URDF_FILE} under {}", args.input.display())));
    }
    let results = Exec::default().map_slice(&dirs, |dir| -> artkit::Result<ObjectBundle> {
        let mut b = ObjectBundle::from_urdf_dir(dir)?;
        if args.pose {
            let s = seed::derive(cfg.seed, &format!("ingest-pose/{}", b.id));
            b.object = pose_object(&b.object, &b.ranges, &StateSampler::default(), s)?.object;
        }
        b.save(&args.out.join(&b.id))?;
        Ok(b)
    });
    let mut failed = 0;
    for (dir, r) in dirs.iter().zip(&results) {
        match r {
            Ok(b) => println!("{}: {} parts, {} joints", b.id, b.object.parts.len(), b.object.joints.len()),
            Err(e) => {
                failed += 1;
                eprintln!("{}: [{}] {e}", dir.display(), e.kind());
            }
        }
    }
    if failed > 0 {
        return Err(CliError::Input(format!("{failed} of {} objects failed to ingest", dirs.len())));
    }
    Ok(())
}
