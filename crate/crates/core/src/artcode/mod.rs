//! The articulation DSL.
//!
//! A document lists part boxes followed by a joint list:
//!
//! ```text
//! bbox_0 = OBB(center=[0.0000, 0.0000, 0.0000], R=[[1.0000, 0.0000, 0.0000], [0.0000, 1.0000, 0.0000], [0.0000, 0.0000, 1.0000]], half=[0.5000, 0.5000, 0.5000])
//! bbox_1 = OBB(...)
//! joints = [
//! Joint(type="revolute", parent=0, child=1, axis=Axis(box=1, idx=2, sign=+1), pivot=Edge(s1=+1, s2=-1)),
//! ]
//! ```
//!
//! The box lines plus the `joints = [` line form the predictor prompt; the
//! joint list is what a predictor completes. Every real is printed with four
//! decimals (ties to even). Two numeric dialects exist for scoring
//! regression-style outputs: absolute `axis=[..], pos=[..]` and
//! center-relative `axis=Axis(..), pos=Offset(u=.., v=..)`.

mod emit;
mod exec;
mod parse;

pub use emit::{emit_document, emit_joint_line, emit_joints, emit_prompt, fmt4};
pub use exec::{execute, export_mjcf, MjcfOptions};
pub use parse::{parse_artcode, parse_artcode_with_obbs};

use serde::{Deserialize, Serialize};

use crate::articulation::{JointType, RelativeJoint, Sign};
use crate::geom::{Mat3, Obb, Vec3, EPSILON_DEGENERATE};
use crate::{Error, Result};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredictionDialect {
    /// Axis column plus box edge; the main format.
    EdgeAxis,
    /// Free axis and pivot vectors.
    AbsoluteNumeric,
    /// Axis column plus a 2D pivot offset from the box center.
    RelativeToCenter,
}

impl PredictionDialect {
    pub fn name(self) -> &'static str {
        match self {
            PredictionDialect::EdgeAxis => "edge-axis",
            PredictionDialect::AbsoluteNumeric => "absolute-numeric",
            PredictionDialect::RelativeToCenter => "relative-to-center",
        }
    }
}

impl std::str::FromStr for PredictionDialect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-axis" | "edge" => Ok(PredictionDialect::EdgeAxis),
            "absolute-numeric" | "absolute" => Ok(PredictionDialect::AbsoluteNumeric),
            "relative-to-center" | "relative" => Ok(PredictionDialect::RelativeToCenter),
            other => Err(Error::InvalidValue(format!("unknown dialect `{other}`"))),
        }
    }
}

/// A box exactly as written in a document (no orthonormality enforced).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocObb {
    pub center: [f64; 3],
    /// Row-major.
    pub rotation: [[f64; 3]; 3],
    pub half: [f64; 3],
}

impl DocObb {
    pub fn from_obb(obb: &Obb) -> Self {
        DocObb {
            center: obb.center.into(),
            rotation: std::array::from_fn(|r| std::array::from_fn(|c| obb.rotation[(r, c)])),
            half: obb.half_lengths.into(),
        }
    }

    /// Every real replaced by its four-decimal printed value.
    pub fn quantized(&self) -> Self {
        DocObb {
            center: self.center.map(quantize4),
            rotation: self.rotation.map(|row| row.map(quantize4)),
            half: self.half.map(quantize4),
        }
    }

    /// Nearest proper box: Gram-Schmidt on the columns in order, third axis
    /// closed by a cross product, half-lengths clamped to the minimum.
    pub fn to_obb(&self) -> Result<Obb> {
        let m = Mat3::from_fn(|r, c| self.rotation[r][c]);
        let c0 = m.column(0).into_owned();
        let c1 = m.column(1).into_owned();
        let c2 = m.column(2).into_owned();
        if c0.norm() < 1e-6 {
            return Err(Error::InvalidValue("box rotation has a zero column".into()));
        }
        let r0 = c0.normalize();
        let r1 = c1 - r0 * r0.dot(&c1);
        if r1.norm() < 1e-6 {
            return Err(Error::InvalidValue("box rotation columns are parallel".into()));
        }
        let r1 = r1.normalize();
        let r2 = r0.cross(&r1);
        if r2.dot(&c2) <= 0.0 {
            return Err(Error::InvalidValue("box rotation is not right-handed".into()));
        }
        let half = Vec3::from(self.half).map(|h| h.max(EPSILON_DEGENERATE));
        Obb::new(Vec3::from(self.center), Mat3::from_columns(&[r0, r1, r2]), half)
    }
}

pub(crate) fn quantize4(x: f64) -> f64 {
    fmt4(x).parse().expect("fmt4 output parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsoluteJoint {
    pub joint_type: JointType,
    pub parent: usize,
    pub child: usize,
    pub axis: [f64; 3],
    pub pos: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterRelativeJoint {
    pub joint_type: JointType,
    pub parent: usize,
    pub child: usize,
    pub axis_idx: u8,
    pub axis_sign: Sign,
    /// Pivot offset `(u, v)` from the box center along the two non-axis box
    /// directions `(idx + 1, idx + 2) mod 3`, in length units.
    pub offset: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DocJoint {
    EdgeAxis(RelativeJoint),
    Absolute(AbsoluteJoint),
    CenterRelative(CenterRelativeJoint),
}

impl DocJoint {
    pub fn parent(&self) -> usize {
        match self {
            DocJoint::EdgeAxis(j) => j.parent,
            DocJoint::Absolute(j) => j.parent,
            DocJoint::CenterRelative(j) => j.parent,
        }
    }

    pub fn child(&self) -> usize {
        match self {
            DocJoint::EdgeAxis(j) => j.child,
            DocJoint::Absolute(j) => j.child,
            DocJoint::CenterRelative(j) => j.child,
        }
    }

    pub fn joint_type(&self) -> JointType {
        match self {
            DocJoint::EdgeAxis(j) => j.joint_type,
            DocJoint::Absolute(j) => j.joint_type,
            DocJoint::CenterRelative(j) => j.joint_type,
        }
    }

    pub fn dialect(&self) -> PredictionDialect {
        match self {
            DocJoint::EdgeAxis(_) => PredictionDialect::EdgeAxis,
            DocJoint::Absolute(_) => PredictionDialect::AbsoluteNumeric,
            DocJoint::CenterRelative(_) => PredictionDialect::RelativeToCenter,
        }
    }
}

/// Boxes are named `bbox_<index>` by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtCodeDocument {
    pub format_version: String,
    pub dialect: PredictionDialect,
    pub obbs: Vec<DocObb>,
    pub joints: Vec<DocJoint>,
}

impl ArtCodeDocument {
    pub fn new(dialect: PredictionDialect, obbs: Vec<DocObb>, joints: Vec<DocJoint>) -> Self {
        ArtCodeDocument {
            format_version: FORMAT_VERSION.to_string(),
            dialect,
            obbs,
            joints,
        }
    }

    pub fn part_name(index: usize) -> String {
        format!("bbox_{index}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotz;

    #[test]
    fn doc_obb_reorthonormalizes_quantized_rotation() {
        let obb = Obb::new(Vec3::new(0.1, 0.2, 0.3), rotz(0.3), Vec3::new(0.5, 0.25, 0.125)).unwrap();
        let q = DocObb::from_obb(&obb).quantized();
        let back = q.to_obb().unwrap();
        assert!((back.rotation - obb.rotation).abs().max() < 1e-4);
        assert_eq!(DocObb::from_obb(&back).quantized(), q);
    }

    #[test]
    fn doc_obb_rejects_reflection() {
        let mut d = DocObb::from_obb(&Obb::axis_aligned(Vec3::zeros(), Vec3::repeat(1.0)).unwrap());
        d.rotation[2][2] = -1.0;
        assert!(d.to_obb().is_err());
    }
}
