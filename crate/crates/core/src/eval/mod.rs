//! Joint metrics, part matching and per-object reports.

mod matching;
mod report;

pub use matching::{brute_force_assignment, hungarian, match_parts, Matching, BRUTE_FORCE_MAX, UNMATCHED_PENALTY};
pub use report::{ReportMetadata, ReportSet, BucketSummary};

use serde::{Deserialize, Serialize};

use crate::articulation::{ArticulatedObject, Joint, JointType, Part};
use crate::geom::chamfer::directed_mean_in;
use crate::geom::{sample_surface, KdTree, PointCloud, TriMesh, Vec3, CHAMFER_SCALE};
use crate::{seed, Error, Exec, Result};

/// Rotation error assigned to a ground-truth joint with no prediction.
pub const MISSING_ROT_ERR_DEG: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointMetrics {
    /// Angle between the undirected axes, degrees in `[0, 90]`.
    pub rot_err_deg: f64,
    /// Distance between the joint lines; `None` unless the ground truth is
    /// revolute.
    pub pos_err: Option<f64>,
    pub type_correct: bool,
}

/// Shortest distance between two infinite lines; parallel lines fall back
/// to point-to-line distance.
pub fn line_distance(p1: &Vec3, d1: &Vec3, p2: &Vec3, d2: &Vec3) -> f64 {
    let n = d1.cross(d2);
    let nn = n.norm();
    if nn <= 1e-12 * d1.norm() * d2.norm() {
        (p2 - p1).cross(d1).norm() / d1.norm()
    } else {
        (p2 - p1).dot(&n).abs() / nn
    }
}

/// Undirected angle between two axes in degrees.
pub fn axis_angle_deg(u: &Vec3, v: &Vec3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v).abs()).to_degrees()
}

/// Metrics of one predicted joint against its ground truth. Position error
/// is only defined when both joints are revolute.
pub fn joint_error(pred: &Joint, gt: &Joint) -> Result<JointMetrics> {
    let pivot = |j: &Joint| match j.joint_type {
        JointType::Revolute => j.pivot.ok_or(Error::MissingPivot).map(Some),
        JointType::Prismatic => Ok(None),
    };
    let (pp, gp) = (pivot(pred)?, pivot(gt)?);
    let pos_err = match (pp, gp) {
        (Some(a), Some(b)) => Some(line_distance(&a, &pred.axis, &b, &gt.axis)),
        _ => None,
    };
    Ok(JointMetrics {
        rot_err_deg: axis_angle_deg(&pred.axis, &gt.axis),
        pos_err,
        type_correct: pred.joint_type == gt.joint_type,
    })
}

/// Part-count buckets of the result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    #[serde(rename = "2 Parts")]
    Two,
    #[serde(rename = "3 Parts")]
    Three,
    #[serde(rename = "4-5 Parts")]
    FourFive,
    #[serde(rename = "6-15 Parts")]
    SixFifteen,
    #[serde(rename = "Other")]
    Other,
}

impl Bucket {
    pub const TABLE: [Bucket; 4] = [Bucket::Two, Bucket::Three, Bucket::FourFive, Bucket::SixFifteen];

    pub fn of(n_parts: usize) -> Bucket {
        match n_parts {
            2 => Bucket::Two,
            3 => Bucket::Three,
            4 | 5 => Bucket::FourFive,
            6..=15 => Bucket::SixFifteen,
            _ => Bucket::Other,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bucket::Two => "2 Parts",
            Bucket::Three => "3 Parts",
            Bucket::FourFive => "4-5 Parts",
            Bucket::SixFifteen => "6-15 Parts",
            Bucket::Other => "Other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointReport {
    pub gt_joint: usize,
    pub pred_joint: Option<usize>,
    pub metrics: JointMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub object_id: String,
    pub n_gt_parts: usize,
    pub n_pred_parts: usize,
    pub bucket: Bucket,
    pub whole_chamfer: f64,
    /// Mean over matched part pairs.
    pub part_chamfer: Option<f64>,
    /// Prediction index to ground-truth index.
    pub permutation: Vec<Option<usize>>,
    pub unmatched_pred_parts: usize,
    pub unmatched_gt_parts: usize,
    /// One entry per ground-truth joint.
    pub joints: Vec<JointReport>,
    pub missing_joints: usize,
    pub extra_joints: usize,
}

impl EvalReport {
    pub fn rot_err_mean(&self) -> Option<f64> {
        mean(self.joints.iter().map(|j| j.metrics.rot_err_deg))
    }

    pub fn pos_err_mean(&self) -> Option<f64> {
        mean(self.joints.iter().filter_map(|j| j.metrics.pos_err))
    }

    pub fn type_accuracy(&self) -> Option<f64> {
        mean(self.joints.iter().map(|j| j.metrics.type_correct as u8 as f64))
    }
}

impl EvalReport {
    /// Full-error entry for a ground-truth object with no prediction: every
    /// part unmatched, every joint missing, shape errors at the penalty.
    pub fn missing_prediction(object_id: &str, gt: &ArticulatedObject) -> Self {
        let diag = diagonal(gt);
        let joints = gt
            .joints
            .iter()
            .enumerate()
            .map(|(gi, gj)| JointReport {
                gt_joint: gi,
                pred_joint: None,
                metrics: JointMetrics {
                    rot_err_deg: MISSING_ROT_ERR_DEG,
                    pos_err: (gj.joint_type == JointType::Revolute).then_some(diag),
                    type_correct: false,
                },
            })
            .collect();
        EvalReport {
            object_id: object_id.to_string(),
            n_gt_parts: gt.parts.len(),
            n_pred_parts: 0,
            bucket: Bucket::of(gt.parts.len()),
            whole_chamfer: UNMATCHED_PENALTY,
            part_chamfer: Some(UNMATCHED_PENALTY),
            permutation: Vec::new(),
            unmatched_pred_parts: 0,
            unmatched_gt_parts: gt.parts.len(),
            missing_joints: gt.joints.len(),
            extra_joints: 0,
            joints,
        }
    }
}

pub(crate) fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn surface(part: &Part) -> TriMesh {
    part.mesh.clone().unwrap_or_else(|| part.obb.to_mesh())
}

fn diagonal(obj: &ArticulatedObject) -> f64 {
    let (lo, hi) = obj
        .parts
        .iter()
        .flat_map(|p| p.obb.corners())
        .fold((Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)), |(lo, hi), c| {
            (lo.inf(&c), hi.sup(&c))
        });
    (hi - lo).norm()
}

/// Scores a predicted object against ground truth.
pub fn evaluate_object(
    object_id: &str,
    pred: &ArticulatedObject,
    gt: &ArticulatedObject,
    samples: usize,
    seed: u64,
) -> Result<EvalReport> {
    evaluate_object_with(Exec::default(), object_id, pred, gt, samples, seed)
}

/// Part `i` of both objects is sampled with the same derived seed, so an
/// object compared with itself scores exactly zero. Joints correspond
/// through the part matching: the prediction for a ground-truth joint is the
/// predicted joint whose child matched the ground-truth child. Missing joints
/// score [`MISSING_ROT_ERR_DEG`], a wrong type, and (revolute) the ground-truth
/// bounding-box diagonal as position error; the diagonal is also used when a
/// revolute ground truth is predicted as prismatic.
pub fn evaluate_object_with(
    exec: Exec,
    object_id: &str,
    pred: &ArticulatedObject,
    gt: &ArticulatedObject,
    samples: usize,
    seed: u64,
) -> Result<EvalReport> {
    if samples == 0 {
        return Err(Error::EmptyInput("evaluation needs at least one sample"));
    }
    let sample_parts = |obj: &ArticulatedObject| -> Result<Vec<PointCloud>> {
        exec.map_range(obj.parts.len(), |i| {
            sample_surface(&surface(&obj.parts[i]), samples, seed::derive_indexed(seed, "part", i as u64))
        })
        .into_iter()
        .collect()
    };
    let pred_pc = sample_parts(pred)?;
    let gt_pc = sample_parts(gt)?;
    let whole = |obj: &ArticulatedObject| {
        let meshes: Vec<TriMesh> = obj.parts.iter().map(surface).collect();
        sample_surface(&TriMesh::merge(&meshes), samples, seed::derive(seed, "whole"))
    };
    let (pw, gw) = (whole(pred)?, whole(gt)?);
    let whole_chamfer = crate::geom::chamfer_with(exec, &pw, &gw)?;

    let pred_trees: Vec<KdTree> = exec.map_slice(&pred_pc, |pc| KdTree::new(&pc.points));
    let gt_trees: Vec<KdTree> = exec.map_slice(&gt_pc, |pc| KdTree::new(&pc.points));
    let (np, ng) = (pred.parts.len(), gt.parts.len());
    let flat = exec.map_range(np * ng, |k| {
        let (i, j) = (k / ng, k % ng);
        let ab = directed_mean_in(Exec::Serial, &pred_pc[i].points, &gt_trees[j]);
        let ba = directed_mean_in(Exec::Serial, &gt_pc[j].points, &pred_trees[i]);
        (ab + ba) * CHAMFER_SCALE
    });
    let cost: Vec<Vec<f64>> = (0..np).map(|i| flat[i * ng..(i + 1) * ng].to_vec()).collect();
    let matching = match_parts(&cost, ng);
    let matched: Vec<f64> = matching
        .pred_to_gt
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.map(|g| cost[i][g]))
        .collect();
    let gt_to_pred = matching.gt_to_pred(ng);

    let diag = diagonal(gt);
    let mut used = vec![false; pred.joints.len()];
    let mut joints = Vec::with_capacity(gt.joints.len());
    for (gi, gj) in gt.joints.iter().enumerate() {
        let pred_joint = gt_to_pred[gj.child].and_then(|pc| pred.joint_into(pc));
        let metrics = match pred_joint {
            Some(pi) => {
                used[pi] = true;
                let mut m = joint_error(&pred.joints[pi], gj)?;
                if gj.joint_type == JointType::Revolute && m.pos_err.is_none() {
                    m.pos_err = Some(diag);
                }
                m
            }
            None => JointMetrics {
                rot_err_deg: MISSING_ROT_ERR_DEG,
                pos_err: (gj.joint_type == JointType::Revolute).then_some(diag),
                type_correct: false,
            },
        };
        joints.push(JointReport {
            gt_joint: gi,
            pred_joint,
            metrics,
        });
    }

    Ok(EvalReport {
        object_id: object_id.to_string(),
        n_gt_parts: ng,
        n_pred_parts: np,
        bucket: Bucket::of(ng),
        whole_chamfer,
        part_chamfer: mean(matched.iter().copied()),
        unmatched_pred_parts: matching.pred_to_gt.iter().filter(|g| g.is_none()).count(),
        unmatched_gt_parts: gt_to_pred.iter().filter(|p| p.is_none()).count(),
        permutation: matching.pred_to_gt,
        missing_joints: joints.iter().filter(|j| j.pred_joint.is_none()).count(),
        extra_joints: used.iter().filter(|u| !**u).count(),
        joints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Obb;

    #[test]
    fn joint_error_examples() {
        let a = Joint::revolute(0, 1, Vec3::z(), Vec3::zeros()).unwrap();
        let b = Joint::revolute(0, 1, -Vec3::z(), Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let m = joint_error(&a, &b).unwrap();
        assert_eq!(m.rot_err_deg, 0.0);
        assert_eq!(m.pos_err, Some(1.0));
        assert!(m.type_correct);
        let c = Joint::prismatic(0, 1, Vec3::x()).unwrap();
        let d = Joint::prismatic(0, 1, Vec3::y()).unwrap();
        let m = joint_error(&c, &d).unwrap();
        assert_eq!(m.rot_err_deg, 90.0);
        assert_eq!(m.pos_err, None);
        let mut broken = a.clone();
        broken.pivot = None;
        assert!(matches!(joint_error(&broken, &a), Err(Error::MissingPivot)));
    }

    #[test]
    fn skew_lines() {
        let d = line_distance(&Vec3::zeros(), &Vec3::x(), &Vec3::new(0.0, 0.0, 2.0), &Vec3::y());
        assert!((d - 2.0).abs() < 1e-15);
    }

    fn three_part() -> ArticulatedObject {
        let parts = vec![
            Part::from_obb("base", Obb::axis_aligned(Vec3::zeros(), Vec3::new(0.5, 0.4, 0.3)).unwrap()),
            Part::from_obb("door", Obb::axis_aligned(Vec3::new(0.55, 0.0, 0.0), Vec3::new(0.05, 0.35, 0.25)).unwrap()),
            Part::from_obb("lid", Obb::axis_aligned(Vec3::new(0.0, 0.0, 0.35), Vec3::new(0.45, 0.35, 0.05)).unwrap()),
        ];
        let joints = vec![
            Joint::revolute(0, 1, Vec3::z(), Vec3::new(0.6, 0.35, 0.0)).unwrap(),
            Joint::prismatic(0, 2, Vec3::z()).unwrap(),
        ];
        ArticulatedObject::new(parts, joints, 0).unwrap()
    }

    #[test]
    fn missing_prediction_scores_full_error() {
        let r = EvalReport::missing_prediction("gone", &three_part());
        assert_eq!(r.missing_joints, 2);
        assert_eq!(r.unmatched_gt_parts, 3);
        assert_eq!(r.type_accuracy(), Some(0.0));
        assert_eq!(r.rot_err_mean(), Some(MISSING_ROT_ERR_DEG));
        assert_eq!(r.whole_chamfer, UNMATCHED_PENALTY);
    }

    #[test]
    fn self_evaluation_is_perfect() {
        let o = three_part();
        let r = evaluate_object("x", &o, &o, 2000, 4).unwrap();
        assert_eq!(r.whole_chamfer, 0.0);
        assert_eq!(r.part_chamfer, Some(0.0));
        assert_eq!(r.rot_err_mean(), Some(0.0));
        assert_eq!(r.pos_err_mean(), Some(0.0));
        assert_eq!(r.type_accuracy(), Some(1.0));
        assert_eq!(r.bucket, Bucket::Three);
        assert_eq!(r.permutation, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn missing_joint_counts_as_wrong() {
        let gt = three_part();
        let mut pred = gt.clone();
        pred.joints.truncate(1);
        let r = evaluate_object("x", &pred, &gt, 500, 4).unwrap();
        assert_eq!(r.missing_joints, 1);
        assert!((r.type_accuracy().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(r.joints[1].metrics.rot_err_deg, 90.0);
    }

    #[test]
    fn permuted_prediction_matches_back() {
        let gt = three_part();
        let mut parts = gt.parts.clone();
        parts.swap(1, 2);
        let joints = vec![
            Joint::prismatic(0, 1, Vec3::z()).unwrap(),
            Joint::revolute(0, 2, Vec3::z(), Vec3::new(0.6, 0.35, 0.0)).unwrap(),
        ];
        let pred = ArticulatedObject::new(parts, joints, 0).unwrap();
        let r = evaluate_object("x", &pred, &gt, 1000, 4).unwrap();
        assert_eq!(r.permutation, vec![Some(0), Some(2), Some(1)]);
        assert_eq!(r.type_accuracy(), Some(1.0));
        assert_eq!(r.rot_err_mean(), Some(0.0));
    }

    #[test]
    fn buckets() {
        assert_eq!(Bucket::of(2), Bucket::Two);
        assert_eq!(Bucket::of(5), Bucket::FourFive);
        assert_eq!(Bucket::of(15), Bucket::SixFifteen);
        assert_eq!(Bucket::of(1), Bucket::Other);
    }
}
