//! Prompt/completion pairs: posed boxes as the prompt, box-relative joints as
//! the completion, augmented by random turns about the vertical axis.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{pose_object, ObjectBundle, StateSampler};
use crate::artcode::{emit_joints, emit_prompt, DocJoint, PredictionDialect};
use crate::articulation::{point_line_distance, quantize_joint, resolve_edge, ArticulatedObject, Joint};
use crate::geom::{rotz, Obb, RigidTransform};
use crate::{seed, Error, Exec, Result};

/// Pivot-to-edge distance, relative to the child box diagonal, above which a
/// sample is flagged (but kept).
const OFF_EDGE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_rotations: usize,
    pub n_poses: usize,
    pub sampler: StateSampler,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n_rotations: 5,
            n_poses: 5,
            sampler: StateSampler::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub object_id: String,
    pub pose_index: usize,
    pub rotation_index: usize,
    /// Seed the joint states were drawn with.
    pub state_seed: u64,
    pub states: Vec<f64>,
    /// Turn about +z, radians.
    pub rotation_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSample {
    pub prompt: String,
    pub completion: String,
    pub meta: SampleMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub object_id: String,
    pub pose_index: usize,
    pub rotation_index: Option<usize>,
    /// False for warnings attached to a sample that was still emitted.
    pub skipped: bool,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<DatasetSample>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Dataset {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            let _ = writeln!(out, "{}", serde_json::to_string(s).expect("sample serializes"));
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Vec<DatasetSample>> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))
            })
            .collect()
    }
}

/// Boxes (sign-canonicalized) and joints of `obj` after a turn of `angle`
/// about the world z axis.
pub fn augment(obj: &ArticulatedObject, angle: f64) -> (Vec<Obb>, Vec<Joint>) {
    let t = RigidTransform::from_rotation(rotz(angle));
    let obbs = obj.parts.iter().map(|p| p.obb.transformed(&t).canonicalized()).collect();
    let joints = obj.joints.iter().map(|j| j.transformed(&t)).collect();
    (obbs, joints)
}

/// Prompt and edge-axis completion for boxes and joints, plus warnings for
/// pivots that do not sit on the chosen box edge.
pub fn encode_sample(obbs: &[Obb], joints: &[Joint]) -> Result<(String, String, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut doc = Vec::with_capacity(joints.len());
    for (i, j) in joints.iter().enumerate() {
        let child = obbs
            .get(j.child)
            .ok_or_else(|| Error::UnknownPart(crate::artcode::ArtCodeDocument::part_name(j.child)))?;
        let rj = quantize_joint(j, child)?;
        if let (Some(pivot), Some(signs)) = (j.pivot, rj.edge_signs) {
            let edge = resolve_edge(child, rj.axis_idx, signs)?;
            let d = point_line_distance(&edge, &pivot, &j.axis);
            let scale = 2.0 * child.half_lengths.norm();
            if d > OFF_EDGE_TOLERANCE * scale.max(1.0) {
                warnings.push(format!("joint {i}: pivot line is {d:.3e} from the nearest box edge"));
            }
        }
        doc.push(DocJoint::EdgeAxis(rj));
    }
    let prompt = emit_prompt(obbs)?;
    let completion = emit_joints(&doc, PredictionDialect::EdgeAxis)?;
    Ok((prompt, completion, warnings))
}

pub fn make_dataset(objects: &[ObjectBundle], config: &DatasetConfig, seed: u64) -> Dataset {
    make_dataset_with(Exec::default(), objects, config, seed)
}

/// `n_poses` partially open poses per object, each turned `n_rotations`
/// times about z. Samples come out in object, pose, rotation order. Samples
/// that cannot be encoded are skipped and reported in `diagnostics`.
pub fn make_dataset_with(exec: Exec, objects: &[ObjectBundle], config: &DatasetConfig, seed: u64) -> Dataset {
    let per_object = exec.map_slice(objects, |b| object_samples(b, config, seed));
    let mut out = Dataset::default();
    for (samples, diags) in per_object {
        out.samples.extend(samples);
        out.diagnostics.extend(diags);
    }
    out
}

fn object_samples(bundle: &ObjectBundle, config: &DatasetConfig, seed: u64) -> (Vec<DatasetSample>, Vec<Diagnostic>) {
    let object_seed = seed::derive(seed, &format!("ingest/{}", bundle.id));
    let mut samples = Vec::with_capacity(config.n_poses * config.n_rotations);
    let mut diags = Vec::new();
    let diag = |pose: usize, rot: Option<usize>, skipped: bool, message: String| Diagnostic {
        object_id: bundle.id.clone(),
        pose_index: pose,
        rotation_index: rot,
        skipped,
        message,
    };
    for p in 0..config.n_poses {
        let state_seed = seed::derive_indexed(object_seed, "pose", p as u64);
        let posed = match pose_object(&bundle.object, &bundle.ranges, &config.sampler, state_seed) {
            Ok(x) => x,
            Err(e) => {
                diags.push(diag(p, None, true, format!("posing failed: {e}")));
                continue;
            }
        };
        let mut rng = seed::rng(seed::derive_indexed(object_seed, "rotation", p as u64));
        for r in 0..config.n_rotations {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let (obbs, joints) = augment(&posed.object, angle);
            match encode_sample(&obbs, &joints) {
                Ok((prompt, completion, warnings)) => {
                    diags.extend(warnings.into_iter().map(|w| diag(p, Some(r), false, w)));
                    samples.push(DatasetSample {
                        prompt,
                        completion,
                        meta: SampleMeta {
                            object_id: bundle.id.clone(),
                            pose_index: p,
                            rotation_index: r,
                            state_seed,
                            states: posed.states.clone(),
                            rotation_z: angle,
                        },
                    });
                }
                Err(e) => diags.push(diag(p, Some(r), true, e.to_string())),
            }
        }
    }
    (samples, diags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artcode::{parse_artcode, parse_artcode_with_obbs, ArtCodeDocument};
    use crate::articulation::{dequantize_joint, JointType, Part};
    use crate::geom::{fit_obb_points, TriMesh, Vec3};
    use proptest::prelude::*;
    use rand::Rng;

    fn cuboid_part(name: &str, min: Vec3, max: Vec3) -> Part {
        let mesh = TriMesh::cuboid(min, max);
        Part {
            name: name.into(),
            obb: fit_obb_points(&mesh.vertices).unwrap(),
            mesh: Some(mesh),
            cloud: None,
        }
    }

    /// Cabinet with a door hinged on a vertical edge and a drawer.
    fn cabinet(id: &str) -> ObjectBundle {
        let body = cuboid_part("body", Vec3::new(-0.4, -0.3, 0.0), Vec3::new(0.4, 0.3, 1.0));
        let door = cuboid_part("door", Vec3::new(0.4, -0.3, 0.5), Vec3::new(0.42, 0.25, 0.95));
        let drawer = cuboid_part("drawer", Vec3::new(-0.35, -0.28, 0.1), Vec3::new(0.41, 0.28, 0.4));
        let hinge = Joint::revolute(0, 1, Vec3::z(), Vec3::new(0.42, 0.25, 0.725)).unwrap();
        let slide = Joint::prismatic(0, 2, Vec3::x()).unwrap();
        let obj = ArticulatedObject::new(vec![body, door, drawer], vec![hinge, slide], 0).unwrap();
        ObjectBundle::new(id, obj)
    }

    #[test]
    fn one_sample_round_trips() {
        let b = cabinet("c0");
        let cfg = DatasetConfig {
            n_rotations: 1,
            n_poses: 1,
            ..Default::default()
        };
        let ds = make_dataset(&[b.clone()], &cfg, 5);
        assert_eq!(ds.samples.len(), 1);
        assert!(ds.diagnostics.is_empty(), "{:?}", ds.diagnostics);
        let s = &ds.samples[0];
        let posed = super::super::pose_at(&b.object, &s.meta.states).unwrap();
        let (obbs, joints) = augment(&posed, s.meta.rotation_z);
        let prompt_doc = parse_artcode(&format!("{}]\n", s.prompt), PredictionDialect::EdgeAxis).unwrap();
        assert_eq!(prompt_doc.obbs.len(), 3);
        let doc = parse_artcode_with_obbs(&s.completion, PredictionDialect::EdgeAxis, &obbs).unwrap();
        for (dj, gt) in doc.joints.iter().zip(&joints) {
            let DocJoint::EdgeAxis(rj) = dj else { panic!() };
            let back = dequantize_joint(rj, &obbs[rj.child]).unwrap();
            assert_eq!(back.joint_type, gt.joint_type);
            assert!(back.axis.dot(&gt.axis) > 1.0 - 1e-12);
            if let (Some(p), Some(q)) = (back.pivot, gt.pivot) {
                assert!(point_line_distance(&p, &q, &gt.axis) < 1e-9);
            }
        }
        let _ = ArtCodeDocument::part_name(0);
    }

    #[test]
    fn counts_and_determinism() {
        let objs: Vec<_> = (0..3).map(|i| cabinet(&format!("c{i}"))).collect();
        let cfg = DatasetConfig::default();
        let a = make_dataset_with(Exec::Serial, &objs, &cfg, 9);
        let b = make_dataset_with(Exec::Parallel, &objs, &cfg, 9);
        assert_eq!(a.samples.len(), 3 * 5 * 5);
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        assert_ne!(a.to_jsonl(), make_dataset(&objs, &cfg, 10).to_jsonl());
        let first: serde_json::Value = serde_json::from_str(a.to_jsonl().lines().next().unwrap()).unwrap();
        assert!(first.get("prompt").is_some() && first.get("completion").is_some() && first.get("meta").is_some());
    }

    #[test]
    fn jsonl_file_round_trip() {
        let ds = make_dataset(&[cabinet("x")], &DatasetConfig::default(), 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        ds.write_jsonl(&path).unwrap();
        assert_eq!(Dataset::read_jsonl(&path).unwrap(), ds.samples);
    }

    #[test]
    fn vertical_hinge_keeps_axis_index() {
        let b = cabinet("v");
        let posed = super::super::pose_at(&b.object, &[0.6, 0.1]).unwrap();
        let (obbs0, joints0) = augment(&posed, 0.0);
        let base = quantize_joint(&joints0[0], &obbs0[1]).unwrap();
        let mut rng = seed::rng(77);
        for _ in 0..100 {
            let (obbs, joints) = augment(&posed, rng.gen_range(0.0..std::f64::consts::TAU));
            let rj = quantize_joint(&joints[0], &obbs[1]).unwrap();
            assert_eq!(rj.axis_idx, base.axis_idx);
            assert!(obbs[1].axis(rj.axis_idx as usize).z.abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn off_edge_pivot_is_flagged_not_dropped() {
        let mut b = cabinet("w");
        b.object.joints[0].pivot = Some(Vec3::new(0.41, 0.0, 0.7));
        let ds = make_dataset(&[b], &DatasetConfig { n_rotations: 2, n_poses: 1, ..Default::default() }, 0);
        assert_eq!(ds.samples.len(), 2);
        assert_eq!(ds.diagnostics.len(), 2);
        assert!(ds.diagnostics.iter().all(|d| !d.skipped));
    }

    #[test]
    fn degenerate_child_is_skipped_with_diagnostic() {
        let mut b = cabinet("d");
        // collapse the drawer to a segment along the slide direction
        let seg = Obb::axis_aligned(Vec3::new(0.0, 0.0, 0.2), Vec3::new(0.3, 1e-6, 1e-6)).unwrap();
        b.object.parts[2] = Part::from_obb("drawer", Obb { degenerate: true, ..seg });
        b.object.joints[1].axis = Vec3::new(0.0, 1.0, 1.0).normalize();
        let ds = make_dataset(&[b], &DatasetConfig { n_rotations: 1, n_poses: 1, ..Default::default() }, 0);
        assert!(ds.samples.is_empty());
        assert_eq!(ds.diagnostics.len(), 1);
        assert!(ds.diagnostics[0].skipped);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn completion_reproduces_ground_truth(seed in any::<u64>()) {
            let b = cabinet("p");
            let cfg = DatasetConfig { n_rotations: 2, n_poses: 2, ..Default::default() };
            let ds = make_dataset_with(Exec::Serial, &[b.clone()], &cfg, seed);
            prop_assert_eq!(ds.samples.len(), 4);
            let mut types = Vec::new();
            for s in &ds.samples {
                let posed = super::super::pose_at(&b.object, &s.meta.states).unwrap();
                let (obbs, joints) = augment(&posed, s.meta.rotation_z);
                let doc = parse_artcode_with_obbs(&s.completion, PredictionDialect::EdgeAxis, &obbs).unwrap();
                let (_, resolved) = doc.resolve().unwrap();
                for (r, gt) in resolved.iter().zip(&joints) {
                    prop_assert!((r.axis - gt.axis).norm() < 1e-9);
                    if let (Some(p), Some(q)) = (r.pivot, gt.pivot) {
                        prop_assert!(point_line_distance(&p, &q, &gt.axis) < 1e-6);
                    }
                }
                types.push(joints.iter().map(|j| j.joint_type).collect::<Vec<JointType>>());
            }
            prop_assert!(types.windows(2).all(|w| w[0] == w[1]));
        }
    }
}
