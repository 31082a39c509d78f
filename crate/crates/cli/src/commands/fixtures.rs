use std::path::PathBuf;

use artkit::fusion::save_view_dir;
use artkit::synth::{cabinet, render_views, write_urdf_fixture, MAX_PARTS, MIN_PARTS};
use artkit::Exec;
use clap::Args;

use crate::error::{CliError, CliResult};
use crate::PipelineConfig;

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Fixed part count; cycles through 2..=10 when absent.
    #[arg(long)]
    pub parts: Option<usize>,
    /// Rendered views per object (0 skips rendering).
    #[arg(long, default_value_t = 3)]
    pub views: usize,
    #[arg(long, default_value_t = 96)]
    pub width: usize,
    #[arg(long, default_value_t = 72)]
    pub height: usize,
    /// Also write URDF object directories under `urdf/`.
    #[arg(long)]
    pub urdf: bool,
}

/// Writes `gt/<id>/` bundles, `views/<id>/view_NN/` renderings and
/// optionally `urdf/<id>/`.
pub fn run(args: &FixturesArgs, cfg: &PipelineConfig) -> CliResult<()> {
    let ids: Vec<(String, usize)> = (0..args.count)
        .map(|i| {
            let n = args.parts.unwrap_or(MIN_PARTS + i % (MAX_PARTS - MIN_PARTS + 1));
            (format!("obj_{i:04}"), n)
        })
        .collect();
    let results = Exec::default().map_slice(&ids, |(id, n)| -> artkit::Result<()> {
        let b = cabinet(id, *n, cfg.seed)?;
        b.save(&args.out.join("gt").join(id))?;
        if args.views > 0 {
            for (v, r) in render_views(&b.object, args.views, args.width, args.height)?.iter().enumerate() {
                save_view_dir(&args.out.join("views").join(id).join(format!("view_{v:02}")), &r.view)?;
            }
        }
        if args.urdf {
            write_urdf_fixture(&b, &args.out.join("urdf").join(id))?;
        }
        Ok(())
    });
    for r in results {
        r.map_err(CliError::input)?;
    }
    println!("{} fixtures -> {}", ids.len(), args.out.display());
    Ok(())
}
