use std::path::{Path, PathBuf};

use artkit::artcode::{emit_document, ArtCodeDocument, DocJoint, DocObb, PredictionDialect};
use artkit::geom::io::{read_obj, read_ply, write_obj};
use artkit::geom::{fit_obb as fit_box, PointCloud};
use artkit::ingest::ObjectBundle;
use artkit::shape::{complete as run_completer, marching_cubes, CompletionRequest, ExternalCompleter, IdentityCompleter, Completer};
use artkit::seed;
use clap::Args;
use serde_json::json;

use super::write_file;
use crate::error::{CliError, CliResult};
use crate::PipelineConfig;

fn read_points(path: &Path) -> CliResult<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ply") => read_ply(path).map_err(CliError::input),
        Some("obj") => Ok(PointCloud::new(read_obj(path).map_err(CliError::input)?.vertices)),
        _ => Err(CliError::Input(format!("{}: expected a .ply or .obj file", path.display()))),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Args)]
pub struct FitObbArgs {
    /// Point cloud (.ply) or mesh (.obj, vertices only).
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn fit_obb(args: &FitObbArgs) -> CliResult<()> {
    let pc = read_points(&args.input)?;
    let obb = fit_box(&pc).map_err(CliError::input)?;
    let d = DocObb::from_obb(&obb);
    let text = serde_json::to_string_pretty(&json!({
        "center": d.center,
        "rotation": d.rotation,
        "half_lengths": d.half,
        "degenerate": obb.degenerate,
        "volume": obb.volume(),
    }))
    .expect("box serializes");
    emit(args.out.as_deref(), &(text + "\n"))
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    /// Object bundle directory.
    pub bundle: PathBuf,
    #[arg(long, default_value = "edge-axis")]
    pub dialect: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn quantize(args: &QuantizeArgs) -> CliResult<()> {
    let dialect: PredictionDialect = args.dialect.parse().map_err(CliError::input)?;
    let b = ObjectBundle::load(&args.bundle).map_err(CliError::input)?;
    let parts = &b.object.parts;
    let joints = b
        .object
        .joints
        .iter()
        .map(|j| DocJoint::encode(j, &parts[j.child].obb, dialect))
        .collect::<artkit::Result<Vec<_>>>()
        .map_err(CliError::stage("quantize"))?;
    let doc = ArtCodeDocument::new(dialect, parts.iter().map(|p| DocObb::from_obb(&p.obb)).collect(), joints);
    let text = emit_document(&doc).map_err(CliError::stage("quantize"))?;
    emit(args.out.as_deref(), &text)
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    /// Partial point cloud (.ply or .obj vertices).
    pub input: PathBuf,
    /// Output occupancy grid (.aog).
    #[arg(long)]
    pub out: PathBuf,
    /// Also extract and write the surface mesh.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub padding: Option<f64>,
    /// `identity` or `file:GRID.aog`.
    #[arg(long)]
    pub completer: Option<String>,
}

pub fn complete(args: &CompleteArgs, cfg: &PipelineConfig) -> CliResult<()> {
    let mut cfg = cfg.clone();
    if let Some(r) = args.resolution {
        cfg.shape.resolution = r;
    }
    if let Some(p) = args.padding {
        cfg.shape.padding = p;
    }
    if let Some(c) = &args.completer {
        cfg.shape.completer = c.clone();
    }
    cfg.validate()?;
    let pc = read_points(&args.input)?;
    let req = CompletionRequest::new(
        &pc,
        cfg.shape.padding,
        cfg.shape.resolution,
        seed::derive(cfg.seed, "complete"),
    )
    .map_err(CliError::input)?;
    let completer: Box<dyn Completer> = match cfg.shape.completer.strip_prefix("file:") {
        Some(p) => Box::new(ExternalCompleter { path: PathBuf::from(p) }),
        None => Box::new(IdentityCompleter::default()),
    };
    let grid = run_completer(&req, completer.as_ref()).map_err(CliError::stage("complete"))?;
    grid.write(&args.out).map_err(CliError::input)?;
    if let Some(m) = &args.mesh {
        let mesh = marching_cubes(&grid, 0.5).map_err(CliError::stage("marching-cubes"))?;
        write_obj(m, &mesh).map_err(CliError::input)?;
    }
    println!("{} occupied cells of {}", grid.occupied_count(), grid.values.len());
    Ok(())
}
