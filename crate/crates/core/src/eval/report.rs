//! Aggregated tables. CSV columns are fixed; JSON carries every object.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{mean, Bucket, EvalReport, UNMATCHED_PENALTY};
use crate::geom::CHAMFER_CONVENTION;
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "bucket,n_objects,whole_cd,part_cd,rot_err_deg,pos_err,type_acc,unmatched_parts,missing_joints";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub chamfer_convention: String,
    pub unmatched_penalty: f64,
    pub rot_err_units: String,
    pub pos_err_units: String,
    pub samples: usize,
    pub seed: u64,
}

impl ReportMetadata {
    pub fn new(samples: usize, seed: u64) -> Self {
        ReportMetadata {
            chamfer_convention: CHAMFER_CONVENTION.to_string(),
            unmatched_penalty: UNMATCHED_PENALTY,
            rot_err_units: "degrees".to_string(),
            pos_err_units: "ground-truth world units".to_string(),
            samples,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub bucket: String,
    pub n_objects: usize,
    pub whole_cd: Option<f64>,
    pub part_cd: Option<f64>,
    /// Pooled over all ground-truth joints in the bucket.
    pub rot_err_deg: Option<f64>,
    pub pos_err: Option<f64>,
    pub type_acc: Option<f64>,
    pub unmatched_parts: usize,
    pub missing_joints: usize,
}

impl BucketSummary {
    fn of<'a>(label: &str, reports: impl Iterator<Item = &'a EvalReport> + Clone) -> Self {
        let joints = reports.clone().flat_map(|r| r.joints.iter());
        BucketSummary {
            bucket: label.to_string(),
            n_objects: reports.clone().count(),
            whole_cd: mean(reports.clone().map(|r| r.whole_chamfer)),
            part_cd: mean(reports.clone().filter_map(|r| r.part_chamfer)),
            rot_err_deg: mean(joints.clone().map(|j| j.metrics.rot_err_deg)),
            pos_err: mean(joints.clone().filter_map(|j| j.metrics.pos_err)),
            type_acc: mean(joints.map(|j| j.metrics.type_correct as u8 as f64)),
            unmatched_parts: reports.clone().map(|r| r.unmatched_gt_parts + r.unmatched_pred_parts).sum(),
            missing_joints: reports.map(|r| r.missing_joints).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub metadata: ReportMetadata,
    pub summary: Vec<BucketSummary>,
    pub objects: Vec<EvalReport>,
}

impl ReportSet {
    /// Summary rows: the four table buckets, `Other` when present, `All`.
    pub fn new(metadata: ReportMetadata, objects: Vec<EvalReport>) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::EmptyInput("no reports to tabulate"));
        }
        let mut summary: Vec<BucketSummary> = Bucket::TABLE
            .iter()
            .map(|b| BucketSummary::of(b.label(), objects.iter().filter(|r| r.bucket == *b)))
            .collect();
        if objects.iter().any(|r| r.bucket == Bucket::Other) {
            summary.push(BucketSummary::of("Other", objects.iter().filter(|r| r.bucket == Bucket::Other)));
        }
        summary.push(BucketSummary::of("All", objects.iter()));
        Ok(ReportSet {
            metadata,
            summary,
            objects,
        })
    }

    pub fn to_csv(&self) -> String {
        let cell = |x: Option<f64>| x.map_or_else(|| "N/A".to_string(), |v| format!("{v:.6}"));
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.bucket,
                s.n_objects,
                cell(s.whole_cd),
                cell(s.part_cd),
                cell(s.rot_err_deg),
                cell(s.pos_err),
                cell(s.type_acc),
                s.unmatched_parts,
                s.missing_joints
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidValue(format!("report JSON: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{JointMetrics, JointReport};

    fn report(n_parts: usize, joints: Vec<JointMetrics>) -> EvalReport {
        EvalReport {
            object_id: format!("obj{n_parts}"),
            n_gt_parts: n_parts,
            n_pred_parts: n_parts,
            bucket: Bucket::of(n_parts),
            whole_chamfer: 0.1 + 1.0 / 3.0,
            part_chamfer: Some(0.2),
            permutation: (0..n_parts).map(Some).collect(),
            unmatched_pred_parts: 0,
            unmatched_gt_parts: 0,
            joints: joints
                .into_iter()
                .enumerate()
                .map(|(i, metrics)| JointReport { gt_joint: i, pred_joint: Some(i), metrics })
                .collect(),
            missing_joints: 0,
            extra_joints: 0,
        }
    }

    #[test]
    fn two_part_row_and_na() {
        let prismatic = JointMetrics { rot_err_deg: 1.5, pos_err: None, type_correct: true };
        let set = ReportSet::new(ReportMetadata::new(100, 0), vec![report(2, vec![prismatic])]).unwrap();
        let csv = set.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "2 Parts,1,0.433333,0.200000,1.500000,N/A,1.000000,0,0");
        assert!(lines[2].starts_with("3 Parts,0,N/A,N/A"));
        assert_eq!(lines.last().unwrap().split(',').next(), Some("All"));
    }

    #[test]
    fn json_round_trip() {
        let rev = JointMetrics { rot_err_deg: 0.1 + 0.2, pos_err: Some(1e-17), type_correct: false };
        let set = ReportSet::new(ReportMetadata::new(10, 7), vec![report(3, vec![rev]), report(1, vec![])]).unwrap();
        let text = set.to_json();
        assert!(text.contains(CHAMFER_CONVENTION));
        assert_eq!(ReportSet::from_json(&text).unwrap(), set);
    }
}
