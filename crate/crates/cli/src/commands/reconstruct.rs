//! views -> fused labels -> per-part clouds -> completion -> marching cubes
//! -> boxes -> prompt -> predictor -> parse -> execute -> export.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use artkit::artcode::{
    emit_document, emit_prompt, export_mjcf, parse_artcode_with_obbs, ArtCodeDocument, DocJoint, MjcfOptions,
    PredictionDialect,
};
use artkit::articulation::{ArticulatedObject, Joint};
use artkit::eval::match_parts;
use artkit::fusion::{fuse_labels_with, load_views};
use artkit::geom::{fit_obb_points, Obb, PointCloud, TriMesh};
use artkit::ingest::ObjectBundle;
use artkit::shape::{complete, marching_cubes, CompletionRequest, Completer, ExternalCompleter, IdentityCompleter};
use artkit::{seed, Exec};
use clap::Args;
use serde::Serialize;

use super::write_file;
use crate::error::{CliError, CliResult};
use crate::predictor::{Oracle, PredictorClient, PredictorSpec};
use crate::PipelineConfig;

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// One object's directory of `view_*` folders, or a directory of such objects.
    pub views: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `oracle`, `file:PATH` or `http:URL`.
    #[arg(long)]
    pub predictor: Option<String>,
    /// Ground-truth bundle (single object) or directory of bundles keyed by object id.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Use the ground-truth boxes instead of boxes fit to the reconstruction.
    #[arg(long)]
    pub gt_obbs: bool,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub padding: Option<f64>,
    /// `identity` or `file:DIR` with precomputed `part_NN.aog` grids.
    #[arg(long)]
    pub completer: Option<String>,
}

#[derive(Debug, Serialize)]
struct StageTiming {
    stage: &'static str,
    seconds: f64,
}

#[derive(Debug, Serialize)]
struct RunReport {
    object_id: String,
    n_views: usize,
    n_points: usize,
    n_segments: usize,
    n_parts: usize,
    n_joints: usize,
    /// Parts left unconnected by the predicted joints.
    dropped_parts: Vec<usize>,
    predictor: String,
    box_source: &'static str,
    stages: Vec<StageTiming>,
    /// Seconds since the Unix epoch; the only non-deterministic field.
    finished_at: f64,
}

struct Timer {
    stages: Vec<StageTiming>,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        Timer {
            stages: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.stages.push(StageTiming {
            stage,
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

fn has_views(dir: &Path) -> bool {
    std::fs::read_dir(dir).is_ok_and(|rd| {
        rd.filter_map(|e| e.ok())
            .any(|e| e.path().is_dir() && e.file_name().to_string_lossy().starts_with("view_"))
    })
}

fn dir_name(p: &Path) -> String {
    p.canonicalize()
        .ok()
        .and_then(|c| c.file_name().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "object".into())
}

pub fn run(args: &ReconstructArgs, cfg: &PipelineConfig) -> CliResult<()> {
    let mut cfg = cfg.clone();
    if let Some(p) = &args.predictor {
        cfg.predictor.spec = p.clone();
    }
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
    let spec: PredictorSpec = cfg.predictor.spec.parse()?;
    if (spec == PredictorSpec::Oracle || args.gt_obbs) && args.gt.is_none() {
        return Err(CliError::Input("the oracle predictor and --gt-obbs need --gt".into()));
    }
    let client = PredictorClient::new(spec, &cfg.predictor);

    // (id, views dir, out dir)
    let jobs: Vec<(String, PathBuf, PathBuf)> = if has_views(&args.views) {
        vec![(dir_name(&args.views), args.views.clone(), args.out.clone())]
    } else {
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(&args.views)
            .map_err(|e| CliError::io(&args.views, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| has_views(p))
            .collect();
        dirs.sort();
        dirs.into_iter()
            .map(|d| {
                let id = dir_name(&d);
                let out = args.out.join(&id);
                (id, d, out)
            })
            .collect()
    };
    if jobs.is_empty() {
        return Err(CliError::Input(format!("no view_* directories under {}", args.views.display())));
    }
    let single = jobs.len() == 1 && has_views(&args.views);
    let results = Exec::default().map_slice(&jobs, |(id, views, out)| {
        let gt = match &args.gt {
            None => None,
            Some(g) => {
                let dir = if single && g.join("object.json").is_file() { g.clone() } else { g.join(id) };
                Some(ObjectBundle::load(&dir).map_err(CliError::input)?)
            }
        };
        reconstruct_object(id, views, out, gt.as_ref(), args.gt_obbs, &cfg, &client)
    });
    let mut first_err = None;
    for ((id, _, _), r) in jobs.iter().zip(results) {
        match r {
            Ok(rep) => println!("{id}: {} parts, {} joints", rep.n_parts, rep.n_joints),
            Err(e) => {
                if jobs.len() > 1 {
                    eprintln!("{id}: {e}");
                }
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) if jobs.len() == 1 => Err(e),
        Some(e) => Err(match e {
            CliError::Input(m) => CliError::Input(format!("some objects failed; first: {m}")),
            other => other,
        }),
        None => Ok(()),
    }
}

fn completer_for(cfg: &PipelineConfig, views: &Path, part: usize) -> Box<dyn Completer> {
    match cfg.shape.completer.strip_prefix("file:") {
        Some(dir) => {
            let dir = Path::new(dir);
            // per-object subdirectory when present
            let base = match views.file_name() {
                Some(id) if dir.join(id).is_dir() => dir.join(id),
                _ => dir.to_path_buf(),
            };
            Box::new(ExternalCompleter {
                path: base.join(format!("part_{part:02}.aog")),
            })
        }
        None => Box::new(IdentityCompleter::default()),
    }
}

/// Segment index assigned to each ground-truth part: the segment with the
/// largest share of points inside the (slightly inflated) box, one-to-one.
fn assign_segments(segments: &[PointCloud], gt: &[Obb]) -> Vec<Option<usize>> {
    let cost: Vec<Vec<f64>> = segments
        .iter()
        .map(|s| {
            gt.iter()
                .map(|o| {
                    let tol = 0.01 * o.half_lengths.norm();
                    let inside = s.points.iter().filter(|p| o.contains(p, tol)).count();
                    -(inside as f64 / s.len().max(1) as f64)
                })
                .collect()
        })
        .collect();
    let m = match_parts(&cost, gt.len());
    let mut out = vec![None; gt.len()];
    for (s, g) in m.pred_to_gt.iter().enumerate() {
        if let Some(g) = *g {
            if cost[s][g] < -0.5 {
                out[g] = Some(s);
            }
        }
    }
    out
}

/// Predicted box index for each ground-truth part, by box center and size.
fn match_boxes(pred: &[Obb], gt: &[Obb]) -> Vec<Option<usize>> {
    let sorted = |o: &Obb| {
        let mut h: Vec<f64> = o.half_lengths.iter().copied().collect();
        h.sort_by(f64::total_cmp);
        artkit::geom::Vec3::new(h[0], h[1], h[2])
    };
    let cost: Vec<Vec<f64>> = pred
        .iter()
        .map(|p| gt.iter().map(|g| (p.center - g.center).norm() + (sorted(p) - sorted(g)).norm()).collect())
        .collect();
    match_parts(&cost, gt.len()).gt_to_pred(gt.len())
}

/// Ground-truth joints whose parts both have a predicted box, re-indexed.
fn oracle_for(gt: &ObjectBundle, obbs: &[Obb], gt_to_pred: &[Option<usize>]) -> Oracle {
    let joints = gt
        .object
        .joints
        .iter()
        .filter_map(|j| {
            let (p, c) = (gt_to_pred[j.parent]?, gt_to_pred[j.child]?);
            Some(Joint {
                parent: p,
                child: c,
                ..j.clone()
            })
        })
        .collect();
    Oracle {
        obbs: obbs.to_vec(),
        joints,
    }
}

/// Keeps the parts reachable from the root (first part that is never a
/// child) and re-indexes the document. Returns the dropped part indices.
fn prune_unreachable(doc: &mut ArtCodeDocument) -> Vec<usize> {
    let n = doc.obbs.len();
    let root = (0..n).find(|p| doc.joints.iter().all(|j| j.child() != *p)).unwrap_or(0);
    let mut keep = vec![false; n];
    keep[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(p) = queue.pop_front() {
        for j in &doc.joints {
            if j.parent() == p && j.child() < n && !keep[j.child()] {
                keep[j.child()] = true;
                queue.push_back(j.child());
            }
        }
    }
    let dropped: Vec<usize> = (0..n).filter(|&i| !keep[i]).collect();
    if dropped.is_empty() {
        return dropped;
    }
    let mut new_index = vec![None; n];
    let mut next = 0;
    for i in 0..n {
        if keep[i] {
            new_index[i] = Some(next);
            next += 1;
        }
    }
    doc.obbs = doc.obbs.iter().enumerate().filter(|(i, _)| keep[*i]).map(|(_, o)| *o).collect();
    doc.joints = doc
        .joints
        .iter()
        .filter_map(|j| {
            let (p, c) = (new_index.get(j.parent()).copied().flatten()?, new_index.get(j.child()).copied().flatten()?);
            Some(match *j {
                DocJoint::EdgeAxis(mut r) => {
                    r.parent = p;
                    r.child = c;
                    DocJoint::EdgeAxis(r)
                }
                DocJoint::Absolute(mut a) => {
                    a.parent = p;
                    a.child = c;
                    DocJoint::Absolute(a)
                }
                DocJoint::CenterRelative(mut r) => {
                    r.parent = p;
                    r.child = c;
                    DocJoint::CenterRelative(r)
                }
            })
        })
        .collect();
    dropped
}

fn reconstruct_object(
    id: &str,
    views_dir: &Path,
    out: &Path,
    gt: Option<&ObjectBundle>,
    gt_obbs: bool,
    cfg: &PipelineConfig,
    client: &PredictorClient,
) -> CliResult<RunReport> {
    let mut timer = Timer::new();
    let views = load_views(views_dir).map_err(CliError::input)?;
    timer.lap("load");

    let fusion_seed = seed::derive(cfg.seed, &format!("fusion/{id}"));
    let fused = fuse_labels_with(Exec::default(), &views, cfg.fusion.n_seeds, fusion_seed, &cfg.fusion_params())
        .map_err(CliError::stage("fusion"))?;
    let labels = fused.labels.clone().unwrap_or_default();
    let n_labels = labels.iter().copied().max().map_or(0, |m| m + 1).max(0) as usize;
    let segments: Vec<PointCloud> = (0..n_labels as i32)
        .map(|l| fused.select_label(l))
        .filter(|c| c.len() >= cfg.fusion.min_part_points)
        .collect();
    if segments.is_empty() {
        return Err(CliError::Stage {
            stage: "fusion",
            message: "no segment has enough points".into(),
        });
    }
    timer.lap("fusion");

    let shape_seed = seed::derive(cfg.seed, &format!("shape/{id}"));
    let meshes: Vec<TriMesh> = Exec::default()
        .map_range(segments.len(), |k| -> artkit::Result<TriMesh> {
            let req = CompletionRequest::new(
                &segments[k],
                cfg.shape.padding,
                cfg.shape.resolution,
                seed::derive_indexed(shape_seed, "part", k as u64),
            )?;
            let grid = complete(&req, completer_for(cfg, views_dir, k).as_ref())?;
            marching_cubes(&grid, 0.5)
        })
        .into_iter()
        .collect::<artkit::Result<_>>()
        .map_err(CliError::stage("shape"))?;
    timer.lap("shape");

    // boxes and their meshes, in prompt order
    let (obbs, part_meshes, gt_to_pred): (Vec<Obb>, Vec<TriMesh>, Option<Vec<Option<usize>>>) = if gt_obbs {
        let gt = gt.expect("checked by caller");
        let gt_boxes: Vec<Obb> = gt.object.parts.iter().map(|p| p.obb).collect();
        let assigned = assign_segments(&segments, &gt_boxes);
        let part_meshes = gt_boxes
            .iter()
            .zip(&assigned)
            .map(|(o, s)| s.map_or_else(|| o.to_mesh(), |s| meshes[s].clone()))
            .collect();
        let identity = (0..gt_boxes.len()).map(Some).collect();
        (gt_boxes, part_meshes, Some(identity))
    } else {
        let obbs = meshes
            .iter()
            .map(|m| fit_obb_points(&m.vertices))
            .collect::<artkit::Result<Vec<_>>>()
            .map_err(CliError::stage("obb"))?;
        let g2p = gt.map(|g| {
            let gt_boxes: Vec<Obb> = g.object.parts.iter().map(|p| p.obb).collect();
            match_boxes(&obbs, &gt_boxes)
        });
        (obbs, meshes, g2p)
    };
    timer.lap("obb");

    let prompt = emit_prompt(&obbs).map_err(CliError::stage("prompt"))?;
    let oracle = gt.zip(gt_to_pred.as_ref()).map(|(g, m)| oracle_for(g, &obbs, m));
    let completion = client.predict(&prompt, oracle.as_ref())?;
    timer.lap("predict");

    let mut doc = parse_artcode_with_obbs(&completion, PredictionDialect::EdgeAxis, &obbs)
        .map_err(CliError::stage("parse"))?;
    let n_boxes = doc.obbs.len();
    let dropped_parts = prune_unreachable(&mut doc);
    if !dropped_parts.is_empty() {
        eprintln!("{id}: dropped unconnected parts {dropped_parts:?}");
    }
    let kept: Vec<usize> = (0..n_boxes).filter(|i| !dropped_parts.contains(i)).collect();
    let mut object: ArticulatedObject = doc.to_object().map_err(CliError::stage("execute"))?;
    for (part, &src) in object.parts.iter_mut().zip(&kept) {
        part.mesh = Some(part_meshes.get(src).cloned().unwrap_or_else(|| part.obb.to_mesh()));
    }
    timer.lap("execute");

    let text = emit_document(&doc).map_err(CliError::stage("export"))?;
    write_file(&out.join("object.artcode"), text)?;
    let mjcf = export_mjcf(
        &doc,
        &[],
        &MjcfOptions {
            mesh_dir: Some("parts".into()),
            model_name: Some(id.to_string()),
        },
    )
    .map_err(CliError::stage("export"))?;
    write_file(&out.join("object.mjcf.xml"), mjcf)?;
    let n_parts = object.parts.len();
    let n_joints = object.joints.len();
    ObjectBundle::new(id, object).save(out).map_err(CliError::stage("export"))?;
    timer.lap("export");

    let report = RunReport {
        object_id: id.to_string(),
        n_views: views.len(),
        n_points: fused.len(),
        n_segments: segments.len(),
        n_parts,
        n_joints,
        dropped_parts,
        predictor: cfg.predictor.spec.clone(),
        box_source: if gt_obbs { "ground-truth" } else { "reconstruction" },
        stages: timer.stages,
        finished_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
    };
    write_file(
        &out.join("report.json"),
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    )?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use artkit::articulation::{RelativeJoint, Sign};
    use artkit::artcode::DocObb;
    use artkit::articulation::JointType;
    use artkit::geom::Vec3;

    fn doc_with(n: usize, edges: &[(usize, usize)]) -> ArtCodeDocument {
        let obbs = (0..n)
            .map(|i| DocObb::from_obb(&Obb::axis_aligned(Vec3::new(i as f64, 0.0, 0.0), Vec3::new(0.3, 0.2, 0.1)).unwrap()))
            .collect();
        let joints = edges
            .iter()
            .map(|&(p, c)| {
                DocJoint::EdgeAxis(RelativeJoint {
                    joint_type: JointType::Prismatic,
                    parent: p,
                    child: c,
                    axis_idx: 0,
                    axis_sign: Sign::Plus,
                    edge_signs: None,
                })
            })
            .collect();
        ArtCodeDocument::new(PredictionDialect::EdgeAxis, obbs, joints)
    }

    #[test]
    fn prune_keeps_connected_tree() {
        let mut d = doc_with(4, &[(0, 1), (2, 3)]);
        assert_eq!(prune_unreachable(&mut d), vec![2, 3]);
        assert_eq!(d.obbs.len(), 2);
        assert_eq!(d.joints.len(), 1);
        let mut d = doc_with(4, &[(1, 0), (1, 3), (3, 2)]);
        assert!(prune_unreachable(&mut d).is_empty());
        let mut d = doc_with(3, &[(0, 2)]);
        assert_eq!(prune_unreachable(&mut d), vec![1]);
        assert_eq!(d.joints[0].child(), 1);
    }

    #[test]
    fn box_matching_is_by_position_and_size() {
        let a = Obb::axis_aligned(Vec3::zeros(), Vec3::new(0.5, 0.4, 0.3)).unwrap();
        let b = Obb::axis_aligned(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.1, 0.2, 0.3)).unwrap();
        assert_eq!(match_boxes(&[b, a], &[a, b]), vec![Some(1), Some(0)]);
        assert_eq!(match_boxes(&[b], &[a, b]), vec![None, Some(0)]);
    }
}
