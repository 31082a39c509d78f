//! Joints, their OBB-relative encoding, kinematic trees and forward kinematics.
//!
//! A joint's axis is encoded as a column of the child part's box rotation
//! (plus a sign); a revolute pivot is encoded as the box edge parallel to that
//! column, selected by the signs `(s1, s2)` along the other two box axes taken
//! in cyclic order `(idx + 1, idx + 2)`. The representative point of an edge
//! is its midpoint.
//!
//! Joint parameters are expressed in the observed frame: a state of zero
//! leaves every part where it was observed, and forward kinematics applies
//! further motion relative to that pose.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::{Obb, PointCloud, RigidTransform, TriMesh, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Prismatic,
    Revolute,
}

impl JointType {
    pub fn as_str(self) -> &'static str {
        match self {
            JointType::Prismatic => "prismatic",
            JointType::Revolute => "revolute",
        }
    }
}

impl fmt::Display for JointType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn from_int(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Absolute joint. `state` is the offset `d` (prismatic) or angle `θ`
/// (revolute, radians) relative to the observed pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub joint_type: JointType,
    pub axis: Vec3,
    pub pivot: Option<Vec3>,
    pub parent: usize,
    pub child: usize,
    #[serde(default)]
    pub state: f64,
}

impl Joint {
    pub fn prismatic(parent: usize, child: usize, axis: Vec3) -> Result<Self> {
        Self::new(JointType::Prismatic, parent, child, axis, None)
    }

    pub fn revolute(parent: usize, child: usize, axis: Vec3, pivot: Vec3) -> Result<Self> {
        Self::new(JointType::Revolute, parent, child, axis, Some(pivot))
    }

    pub fn new(
        joint_type: JointType,
        parent: usize,
        child: usize,
        axis: Vec3,
        pivot: Option<Vec3>,
    ) -> Result<Self> {
        let j = Joint {
            joint_type,
            axis,
            pivot,
            parent,
            child,
            state: 0.0,
        };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.axis.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidValue(format!("joint axis {:?} is not unit", self.axis)));
        }
        if self.parent == self.child {
            return Err(Error::InvalidValue(format!("joint connects part {} to itself", self.child)));
        }
        match (self.joint_type, self.pivot) {
            (JointType::Prismatic, Some(_)) => {
                Err(Error::InvalidValue("prismatic joints carry no pivot".into()))
            }
            (JointType::Revolute, None) => Err(Error::MissingPivot),
            _ => Ok(()),
        }
    }

    /// Motion of the child for `state`, in the parent's observed frame.
    pub fn motion(&self, state: f64) -> RigidTransform {
        match self.joint_type {
            JointType::Prismatic => RigidTransform::from_translation(self.axis * state),
            JointType::Revolute => RigidTransform::rotation_about_line(
                &self.pivot.unwrap_or_else(Vec3::zeros),
                &self.axis,
                state,
            ),
        }
    }

    /// The same joint seen after its parent moved by `t`.
    pub fn transformed(&self, t: &RigidTransform) -> Joint {
        Joint {
            axis: t.apply_vector(&self.axis),
            pivot: self.pivot.map(|p| t.apply_point(&p)),
            ..self.clone()
        }
    }
}

/// Joint encoded against the child part's box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelativeJoint {
    pub joint_type: JointType,
    pub parent: usize,
    pub child: usize,
    pub axis_idx: u8,
    pub axis_sign: Sign,
    /// Revolute only.
    pub edge_signs: Option<(Sign, Sign)>,
}

impl RelativeJoint {
    pub fn validate(&self) -> Result<()> {
        if self.axis_idx > 2 {
            return Err(Error::InvalidAxisIndex(self.axis_idx as i64));
        }
        match (self.joint_type, self.edge_signs) {
            (JointType::Prismatic, Some(_)) => {
                Err(Error::InvalidValue("prismatic joints carry no edge signs".into()))
            }
            (JointType::Revolute, None) => Err(Error::MissingPivot),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub mesh: Option<TriMesh>,
    pub cloud: Option<PointCloud>,
    pub obb: Obb,
}

impl Part {
    pub fn from_obb(name: impl Into<String>, obb: Obb) -> Self {
        Part {
            name: name.into(),
            mesh: None,
            cloud: None,
            obb,
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> Part {
        Part {
            name: self.name.clone(),
            mesh: self.mesh.as_ref().map(|m| m.transformed(t)),
            cloud: self.cloud.as_ref().map(|c| crate::geom::transform_points(t, c)),
            obb: self.obb.transformed(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticulatedObject {
    pub parts: Vec<Part>,
    pub joints: Vec<Joint>,
    pub root: usize,
}

/// Problems found by [`validate_tree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeDiagnostic {
    IndexOutOfRange { joint: usize, index: usize },
    SelfLoop { joint: usize },
    RootHasParent { joint: usize },
    MultiParent { part: usize, joints: Vec<usize> },
    Orphan { part: usize },
    CycleDetected { part: usize },
}

impl fmt::Display for TreeDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeDiagnostic::IndexOutOfRange { joint, index } => {
                write!(f, "joint {joint} references part {index}, which does not exist")
            }
            TreeDiagnostic::SelfLoop { joint } => write!(f, "joint {joint} connects a part to itself"),
            TreeDiagnostic::RootHasParent { joint } => write!(f, "joint {joint} gives the root a parent"),
            TreeDiagnostic::MultiParent { part, joints } => {
                write!(f, "part {part} is the child of joints {joints:?}")
            }
            TreeDiagnostic::Orphan { part } => write!(f, "part {part} is not connected to the root"),
            TreeDiagnostic::CycleDetected { part } => write!(f, "cycle through part {part}"),
        }
    }
}

/// Checks that the joints form a tree rooted at `obj.root`.
pub fn validate_tree(obj: &ArticulatedObject) -> Vec<TreeDiagnostic> {
    validate_edges(obj.parts.len(), obj.root, obj.joints.iter().map(|j| (j.parent, j.child)))
}

pub(crate) fn validate_edges(
    n_parts: usize,
    root: usize,
    edges: impl Iterator<Item = (usize, usize)>,
) -> Vec<TreeDiagnostic> {
    let edges: Vec<(usize, usize)> = edges.collect();
    let mut diags = Vec::new();
    if root >= n_parts {
        diags.push(TreeDiagnostic::IndexOutOfRange {
            joint: usize::MAX,
            index: root,
        });
        return diags;
    }
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n_parts];
    let mut usable = vec![false; edges.len()];
    for (j, &(p, c)) in edges.iter().enumerate() {
        if p >= n_parts || c >= n_parts {
            diags.push(TreeDiagnostic::IndexOutOfRange {
                joint: j,
                index: if p >= n_parts { p } else { c },
            });
            continue;
        }
        if p == c {
            diags.push(TreeDiagnostic::SelfLoop { joint: j });
            continue;
        }
        if c == root {
            diags.push(TreeDiagnostic::RootHasParent { joint: j });
        }
        parents[c].push(j);
        usable[j] = true;
    }
    for (part, js) in parents.iter().enumerate() {
        if js.len() > 1 {
            diags.push(TreeDiagnostic::MultiParent {
                part,
                joints: js.clone(),
            });
        }
    }
    // walk up from every part: reaching the root is fine, revisiting is a cycle
    let mut reported_cycle = vec![false; n_parts];
    for start in 0..n_parts {
        if start == root {
            continue;
        }
        let mut seen = vec![false; n_parts];
        let mut cur = start;
        loop {
            if cur == root {
                break;
            }
            if seen[cur] {
                if !reported_cycle[cur] {
                    // mark every node on the cycle once
                    let mut k = cur;
                    loop {
                        reported_cycle[k] = true;
                        k = edges[parents[k][0]].0;
                        if k == cur {
                            break;
                        }
                    }
                    diags.push(TreeDiagnostic::CycleDetected { part: cur });
                }
                break;
            }
            seen[cur] = true;
            match parents[cur].iter().find(|&&j| usable[j]) {
                Some(&j) => cur = edges[j].0,
                None => {
                    diags.push(TreeDiagnostic::Orphan { part: start });
                    break;
                }
            }
        }
    }
    diags
}

/// `sign · column(axis_idx)` of the box rotation.
pub fn resolve_axis(obb: &Obb, axis_idx: u8, axis_sign: Sign) -> Result<Vec3> {
    if axis_idx > 2 {
        return Err(Error::InvalidAxisIndex(axis_idx as i64));
    }
    Ok(obb.axis(axis_idx as usize) * axis_sign.value())
}

/// Midpoint of the box edge parallel to axis `axis_idx`, offset by
/// `s1·h_j·r_j + s2·h_k·r_k` with `(j, k) = (idx + 1, idx + 2) mod 3`.
pub fn resolve_edge(obb: &Obb, axis_idx: u8, edge_signs: (Sign, Sign)) -> Result<Vec3> {
    if axis_idx > 2 {
        return Err(Error::InvalidAxisIndex(axis_idx as i64));
    }
    let (j, k) = cyclic_pair(axis_idx);
    Ok(obb.center
        + obb.axis(j) * (edge_signs.0.value() * obb.half_lengths[j])
        + obb.axis(k) * (edge_signs.1.value() * obb.half_lengths[k]))
}

pub(crate) fn cyclic_pair(axis_idx: u8) -> (usize, usize) {
    let i = axis_idx as usize;
    ((i + 1) % 3, (i + 2) % 3)
}

/// Sign pairs in tie-break order: `+1` before `-1`, first sign first.
pub const EDGE_SIGN_ORDER: [(Sign, Sign); 4] = [
    (Sign::Plus, Sign::Plus),
    (Sign::Plus, Sign::Minus),
    (Sign::Minus, Sign::Plus),
    (Sign::Minus, Sign::Minus),
];

pub(crate) fn point_line_distance(p: &Vec3, origin: &Vec3, dir: &Vec3) -> f64 {
    (p - origin).cross(dir).norm() / dir.norm()
}

/// Nearest OBB-relative encoding of an absolute joint: the box axis with the
/// largest `|axis · r_i|` (lowest index on ties), its sign (`+1` on zero), and
/// for revolute joints the edge whose midpoint is closest to the joint line.
pub fn quantize_joint(j: &Joint, child_obb: &Obb) -> Result<RelativeJoint> {
    let dots: Vec<f64> = (0..3).map(|i| j.axis.dot(&child_obb.axis(i))).collect();
    let mut idx = 0usize;
    for i in 1..3 {
        if dots[i].abs() > dots[idx].abs() {
            idx = i;
        }
    }
    if child_obb.degenerate {
        let near_tie = (0..3).any(|i| i != idx && (dots[idx].abs() - dots[i].abs()).abs() <= 1e-6);
        if near_tie {
            return Err(Error::DegenerateGeometry(format!(
                "joint axis {:?} is equidistant to two axes of a degenerate box",
                j.axis
            )));
        }
    }
    let axis_sign = Sign::of(dots[idx]);
    let axis_idx = idx as u8;
    let edge_signs = match j.joint_type {
        JointType::Prismatic => None,
        JointType::Revolute => {
            let pivot = j.pivot.ok_or(Error::MissingPivot)?;
            let mut best = (EDGE_SIGN_ORDER[0], f64::INFINITY);
            for signs in EDGE_SIGN_ORDER {
                let p = resolve_edge(child_obb, axis_idx, signs)?;
                let d = point_line_distance(&p, &pivot, &j.axis);
                if d < best.1 {
                    best = (signs, d);
                }
            }
            Some(best.0)
        }
    };
    Ok(RelativeJoint {
        joint_type: j.joint_type,
        parent: j.parent,
        child: j.child,
        axis_idx,
        axis_sign,
        edge_signs,
    })
}

/// Absolute joint (state 0) from its box-relative encoding.
pub fn dequantize_joint(rj: &RelativeJoint, child_obb: &Obb) -> Result<Joint> {
    rj.validate()?;
    let axis = resolve_axis(child_obb, rj.axis_idx, rj.axis_sign)?;
    let pivot = match rj.edge_signs {
        Some(signs) => Some(resolve_edge(child_obb, rj.axis_idx, signs)?),
        None => None,
    };
    Ok(Joint {
        joint_type: rj.joint_type,
        axis,
        pivot,
        parent: rj.parent,
        child: rj.child,
        state: 0.0,
    })
}

/// Parts in root-first breadth-first order, with the joint feeding each
/// non-root part.
pub(crate) fn traversal(obj: &ArticulatedObject) -> Result<(Vec<usize>, Vec<Option<usize>>)> {
    if let Some(d) = validate_tree(obj).into_iter().next() {
        return Err(match d {
            TreeDiagnostic::CycleDetected { part } => Error::CycleDetected(part),
            other => Error::InvalidTree(other.to_string()),
        });
    }
    let n = obj.parts.len();
    let mut incoming = vec![None; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ji, j) in obj.joints.iter().enumerate() {
        incoming[j.child] = Some(ji);
        children[j.parent].push(j.child);
    }
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([obj.root]);
    while let Some(p) = queue.pop_front() {
        order.push(p);
        queue.extend(children[p].iter().copied());
    }
    Ok((order, incoming))
}

/// Per-part transforms from the observed pose: the root stays put and each
/// child composes its parent's transform with its own joint motion.
pub fn forward_kinematics(obj: &ArticulatedObject, states: &[f64]) -> Result<Vec<RigidTransform>> {
    if states.len() != obj.joints.len() {
        return Err(Error::StateLengthMismatch {
            expected: obj.joints.len(),
            got: states.len(),
        });
    }
    let (order, incoming) = traversal(obj)?;
    let mut out = vec![RigidTransform::identity(); obj.parts.len()];
    for &p in &order {
        if let Some(ji) = incoming[p] {
            let j = &obj.joints[ji];
            out[p] = out[j.parent].compose(&j.motion(states[ji]));
        }
    }
    Ok(out)
}

impl ArticulatedObject {
    pub fn new(parts: Vec<Part>, joints: Vec<Joint>, root: usize) -> Result<Self> {
        for j in &joints {
            j.validate()?;
        }
        let obj = ArticulatedObject { parts, joints, root };
        traversal(&obj)?;
        Ok(obj)
    }

    /// The object moved to `states`, re-expressed so that the new pose is
    /// the observed one: parts are transformed, joints follow their parents,
    /// and every state resets to zero.
    pub fn posed(&self, states: &[f64]) -> Result<ArticulatedObject> {
        let transforms = forward_kinematics(self, states)?;
        let parts = self
            .parts
            .iter()
            .zip(&transforms)
            .map(|(p, t)| p.transformed(t))
            .collect();
        let joints = self
            .joints
            .iter()
            .map(|j| Joint {
                state: 0.0,
                ..j.transformed(&transforms[j.parent])
            })
            .collect();
        Ok(ArticulatedObject {
            parts,
            joints,
            root: self.root,
        })
    }

    /// Index of the joint whose child is `part`.
    pub fn joint_into(&self, part: usize) -> Option<usize> {
        self.joints.iter().position(|j| j.child == part)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{rotz, Mat3};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn obb(center: Vec3, rot: Mat3, half: Vec3) -> Obb {
        Obb::new(center, rot, half).unwrap()
    }

    fn boxes(n: usize) -> Vec<Part> {
        (0..n)
            .map(|i| Part::from_obb(format!("p{i}"), Obb::axis_aligned(Vec3::zeros(), Vec3::repeat(0.5)).unwrap()))
            .collect()
    }

    #[test]
    fn resolve_axis_examples() {
        let id = obb(Vec3::zeros(), Mat3::identity(), Vec3::repeat(1.0));
        assert_eq!(resolve_axis(&id, 2, Sign::Plus).unwrap(), Vec3::z());
        assert_eq!(resolve_axis(&id, 2, Sign::Minus).unwrap(), -Vec3::z());
        let r = obb(Vec3::zeros(), rotz(FRAC_PI_2), Vec3::repeat(1.0));
        assert!((resolve_axis(&r, 0, Sign::Plus).unwrap() - Vec3::y()).norm() < 1e-12);
        assert!(matches!(resolve_axis(&id, 3, Sign::Plus), Err(Error::InvalidAxisIndex(3))));
    }

    #[test]
    fn resolve_edge_examples() {
        let half = Vec3::new(1.0, 2.0, 3.0);
        let a = obb(Vec3::zeros(), Mat3::identity(), half);
        assert_eq!(resolve_edge(&a, 2, (Sign::Plus, Sign::Minus)).unwrap(), Vec3::new(1.0, -2.0, 0.0));
        let b = obb(Vec3::new(5.0, 0.0, 0.0), Mat3::identity(), half);
        assert_eq!(resolve_edge(&b, 0, (Sign::Plus, Sign::Plus)).unwrap(), Vec3::new(5.0, 2.0, 3.0));
        let c = obb(Vec3::zeros(), rotz(FRAC_PI_2), half);
        let p = resolve_edge(&c, 2, (Sign::Plus, Sign::Plus)).unwrap();
        assert!((p - Vec3::new(-2.0, 1.0, 0.0)).norm() < 1e-12);
        assert!(resolve_edge(&a, 7, (Sign::Plus, Sign::Plus)).is_err());
    }

    #[test]
    fn quantize_examples() {
        let id = obb(Vec3::zeros(), Mat3::identity(), Vec3::new(1.0, 2.0, 3.0));
        let j = Joint::prismatic(0, 1, Vec3::new(0.0, 0.001, 1.0).normalize()).unwrap();
        let q = quantize_joint(&j, &id).unwrap();
        assert_eq!((q.axis_idx, q.axis_sign, q.edge_signs), (2, Sign::Plus, None));

        let j = Joint::revolute(0, 1, Vec3::z(), Vec3::new(0.99, -2.01, 7.0)).unwrap();
        let q = quantize_joint(&j, &id).unwrap();
        assert_eq!(q.edge_signs, Some((Sign::Plus, Sign::Minus)));

        let j = Joint::prismatic(0, 1, Vec3::new(1.0, 1.0, 0.0).normalize()).unwrap();
        assert_eq!(quantize_joint(&j, &id).unwrap().axis_idx, 0);

        let j = Joint::prismatic(0, 1, Vec3::new(0.0, -1.0, 0.0)).unwrap();
        let q = quantize_joint(&j, &id).unwrap();
        assert_eq!((q.axis_idx, q.axis_sign), (1, Sign::Minus));
    }

    #[test]
    fn degenerate_box_with_ambiguous_axis() {
        let mut b = obb(Vec3::zeros(), Mat3::identity(), Vec3::new(1.0, 1e-6, 1e-6));
        b.degenerate = true;
        let j = Joint::prismatic(0, 1, Vec3::new(1.0, 1.0, 0.0).normalize()).unwrap();
        assert!(matches!(quantize_joint(&j, &b), Err(Error::DegenerateGeometry(_))));
        let j = Joint::prismatic(0, 1, Vec3::x()).unwrap();
        assert!(quantize_joint(&j, &b).is_ok());
    }

    #[test]
    fn dequantize_examples() {
        let b = obb(Vec3::repeat(1.0), Mat3::identity(), Vec3::repeat(1.0));
        let rj = RelativeJoint {
            joint_type: JointType::Revolute,
            parent: 0,
            child: 1,
            axis_idx: 2,
            axis_sign: Sign::Plus,
            edge_signs: Some((Sign::Plus, Sign::Plus)),
        };
        let j = dequantize_joint(&rj, &b).unwrap();
        assert_eq!(j.axis, Vec3::z());
        assert_eq!(j.pivot, Some(Vec3::new(2.0, 2.0, 1.0)));

        let r = obb(Vec3::zeros(), rotz(FRAC_PI_2), Vec3::repeat(1.0));
        let rj = RelativeJoint {
            joint_type: JointType::Prismatic,
            parent: 0,
            child: 1,
            axis_idx: 1,
            axis_sign: Sign::Minus,
            edge_signs: None,
        };
        let j = dequantize_joint(&rj, &r).unwrap();
        assert!((j.axis - Vec3::x()).norm() < 1e-12);
        assert_eq!(j.pivot, None);
    }

    #[test]
    fn round_trip_on_edge_pivot() {
        let b = obb(Vec3::new(0.3, -0.2, 1.0), rotz(0.7), Vec3::new(0.4, 0.1, 0.9));
        let pivot = resolve_edge(&b, 2, (Sign::Minus, Sign::Plus)).unwrap() + b.axis(2) * 0.37;
        let j = Joint::revolute(0, 1, -b.axis(2), pivot).unwrap();
        let back = dequantize_joint(&quantize_joint(&j, &b).unwrap(), &b).unwrap();
        assert_eq!(back.axis, j.axis);
        assert!(point_line_distance(&back.pivot.unwrap(), &pivot, &j.axis) < 1e-9);
    }

    #[test]
    fn tree_diagnostics() {
        let ok = ArticulatedObject {
            parts: boxes(3),
            joints: vec![
                Joint::prismatic(0, 1, Vec3::x()).unwrap(),
                Joint::prismatic(0, 2, Vec3::x()).unwrap(),
            ],
            root: 0,
        };
        assert!(validate_tree(&ok).is_empty());

        let cyc = ArticulatedObject {
            parts: boxes(3),
            joints: vec![
                Joint::prismatic(1, 2, Vec3::x()).unwrap(),
                Joint::prismatic(2, 1, Vec3::x()).unwrap(),
            ],
            root: 0,
        };
        let d = validate_tree(&cyc);
        assert!(d.iter().any(|d| matches!(d, TreeDiagnostic::CycleDetected { .. })), "{d:?}");
        assert!(matches!(forward_kinematics(&cyc, &[0.0, 0.0]), Err(Error::CycleDetected(_))));

        let two_cycle = ArticulatedObject {
            parts: boxes(2),
            joints: vec![
                Joint::prismatic(0, 1, Vec3::x()).unwrap(),
                Joint::prismatic(1, 0, Vec3::x()).unwrap(),
            ],
            root: 0,
        };
        assert!(validate_tree(&two_cycle)
            .iter()
            .any(|d| matches!(d, TreeDiagnostic::RootHasParent { .. })));

        let oob = ArticulatedObject {
            parts: boxes(3),
            joints: vec![
                Joint::prismatic(0, 1, Vec3::x()).unwrap(),
                Joint::prismatic(0, 7, Vec3::x()).unwrap(),
            ],
            root: 0,
        };
        let d = validate_tree(&oob);
        assert!(d.contains(&TreeDiagnostic::IndexOutOfRange { joint: 1, index: 7 }));
        assert!(d.contains(&TreeDiagnostic::Orphan { part: 2 }));
    }

    #[test]
    fn fk_examples() {
        let mut obj = ArticulatedObject {
            parts: boxes(2),
            joints: vec![Joint::prismatic(0, 1, Vec3::z()).unwrap()],
            root: 0,
        };
        for t in forward_kinematics(&obj, &[0.0]).unwrap() {
            assert_eq!(t, RigidTransform::identity());
        }
        let t = forward_kinematics(&obj, &[0.5]).unwrap();
        assert_eq!(t[1].translation, Vec3::new(0.0, 0.0, 0.5));

        obj.joints = vec![Joint::revolute(0, 1, Vec3::z(), Vec3::x()).unwrap()];
        let t = forward_kinematics(&obj, &[PI]).unwrap();
        assert!((t[1].apply_point(&Vec3::zeros()) - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-9);

        assert!(matches!(
            forward_kinematics(&obj, &[]),
            Err(Error::StateLengthMismatch { expected: 1, got: 0 })
        ));
    }

    #[test]
    fn fk_chain_moves_grandchild_axis_with_parent() {
        // 0 -> 1 revolute about z through origin, 1 -> 2 prismatic along x
        let obj = ArticulatedObject::new(
            boxes(3),
            vec![
                Joint::revolute(0, 1, Vec3::z(), Vec3::zeros()).unwrap(),
                Joint::prismatic(1, 2, Vec3::x()).unwrap(),
            ],
            0,
        )
        .unwrap();
        let t = forward_kinematics(&obj, &[FRAC_PI_2, 1.0]).unwrap();
        // slide happens along x, then the whole thing turns by 90° about z
        assert!((t[2].apply_point(&Vec3::zeros()) - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        let posed = obj.posed(&[FRAC_PI_4, 0.0]).unwrap();
        assert!((posed.joints[1].axis - Vec3::new(1.0, 1.0, 0.0).normalize()).norm() < 1e-12);
    }
}
