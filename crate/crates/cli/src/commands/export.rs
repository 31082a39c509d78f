use std::path::PathBuf;

use artkit::artcode::{execute, export_mjcf, parse_artcode, MjcfOptions, PredictionDialect};
use artkit::geom::io::read_obj;
use artkit::geom::TriMesh;
use clap::{Args, ValueEnum};

use super::{parse_states, write_file};
use crate::error::{CliError, CliResult};
use crate::export::{write_gltf, write_obj_parts};
use crate::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Mjcf,
    Obj,
    Gltf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Input `.artcode` document.
    pub artcode: PathBuf,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated joint states (default: all zero).
    #[arg(long, allow_hyphen_values = true)]
    pub states: Option<String>,
    /// Directory of observed-pose part meshes named `<part>.obj`; boxes are
    /// used for parts without one.
    #[arg(long)]
    pub meshes: Option<PathBuf>,
    #[arg(long, default_value = "edge-axis")]
    pub dialect: String,
}

pub fn run(args: &ExportArgs, _cfg: &PipelineConfig) -> CliResult<()> {
    let dialect: PredictionDialect = args.dialect.parse().map_err(CliError::input)?;
    let text = std::fs::read_to_string(&args.artcode).map_err(|e| CliError::io(&args.artcode, e))?;
    let doc = parse_artcode(&text, dialect).map_err(CliError::input)?;
    let states = parse_states(args.states.as_deref())?;
    if !states.is_empty() && states.len() != doc.joints.len() {
        return Err(CliError::Input(format!(
            "[InvalidArgument] {} states given for {} joints",
            states.len(),
            doc.joints.len()
        )));
    }
    let out = match args.format {
        ExportFormat::Mjcf => {
            let opts = MjcfOptions {
                mesh_dir: args.meshes.as_ref().map(|m| m.display().to_string()),
                model_name: args.artcode.file_stem().map(|s| s.to_string_lossy().into_owned()),
            };
            export_mjcf(&doc, &states, &opts).map_err(CliError::stage("export"))?
        }
        fmt => {
            let (obj, fk) = execute(&doc, &states).map_err(CliError::stage("execute"))?;
            let mut parts: Vec<(String, TriMesh)> = Vec::with_capacity(obj.parts.len());
            for (p, t) in obj.parts.iter().zip(&fk) {
                let path = args.meshes.as_ref().map(|d| d.join(format!("{}.obj", p.name)));
                let mesh = match path.filter(|p| p.is_file()) {
                    Some(path) => read_obj(&path).map_err(CliError::input)?,
                    None => p.obb.to_mesh(),
                };
                parts.push((p.name.clone(), mesh.transformed(t)));
            }
            if fmt == ExportFormat::Obj {
                write_obj_parts(&parts)
            } else {
                write_gltf(&parts)
            }
        }
    };
    write_file(&args.out, out)
}
