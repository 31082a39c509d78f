use std::fmt::Write as _;

use nalgebra::{Rotation3, UnitQuaternion};

use super::{AbsoluteJoint, ArtCodeDocument, CenterRelativeJoint, DocJoint, PredictionDialect};
use crate::articulation::{
    cyclic_pair, dequantize_joint, forward_kinematics, quantize_joint, resolve_axis,
    ArticulatedObject, Joint, JointType, Part,
};
use crate::geom::{Obb, RigidTransform, Vec3};
use crate::{Error, Result};

impl DocJoint {
    /// Absolute joint against the given boxes.
    pub fn resolve(&self, obbs: &[Obb]) -> Result<Joint> {
        let child_obb = |c: usize| {
            obbs.get(c)
                .ok_or_else(|| Error::UnknownPart(ArtCodeDocument::part_name(c)))
        };
        for idx in [self.parent(), self.child()] {
            child_obb(idx)?;
        }
        match self {
            DocJoint::EdgeAxis(rj) => dequantize_joint(rj, child_obb(rj.child)?),
            DocJoint::Absolute(j) => {
                let axis = Vec3::from(j.axis);
                let n = axis.norm();
                if !(n > 1e-12) || !n.is_finite() {
                    return Err(Error::InvalidValue(format!("joint axis {:?} has no direction", j.axis)));
                }
                Joint::new(j.joint_type, j.parent, j.child, axis / n, j.pos.map(Vec3::from))
            }
            DocJoint::CenterRelative(j) => {
                let obb = child_obb(j.child)?;
                let axis = resolve_axis(obb, j.axis_idx, j.axis_sign)?;
                let (a, b) = cyclic_pair(j.axis_idx);
                let pivot = j
                    .offset
                    .map(|(u, v)| obb.center + obb.axis(a) * u + obb.axis(b) * v);
                Joint::new(j.joint_type, j.parent, j.child, axis, pivot)
            }
        }
    }

    /// Encodes an absolute joint in `dialect` against its child box.
    pub fn encode(j: &Joint, child_obb: &Obb, dialect: PredictionDialect) -> Result<DocJoint> {
        Ok(match dialect {
            PredictionDialect::EdgeAxis => DocJoint::EdgeAxis(quantize_joint(j, child_obb)?),
            PredictionDialect::AbsoluteNumeric => DocJoint::Absolute(AbsoluteJoint {
                joint_type: j.joint_type,
                parent: j.parent,
                child: j.child,
                axis: j.axis.into(),
                pos: j.pivot.map(Into::into),
            }),
            PredictionDialect::RelativeToCenter => {
                let rj = quantize_joint(j, child_obb)?;
                let (a, b) = cyclic_pair(rj.axis_idx);
                let offset = j.pivot.map(|p| {
                    let d = p - child_obb.center;
                    (d.dot(&child_obb.axis(a)), d.dot(&child_obb.axis(b)))
                });
                DocJoint::CenterRelative(CenterRelativeJoint {
                    joint_type: j.joint_type,
                    parent: j.parent,
                    child: j.child,
                    axis_idx: rj.axis_idx,
                    axis_sign: rj.axis_sign,
                    offset,
                })
            }
        })
    }
}

impl ArtCodeDocument {
    /// Boxes and absolute joints, ready to assemble.
    pub fn resolve(&self) -> Result<(Vec<Obb>, Vec<Joint>)> {
        let obbs = self.obbs.iter().map(|o| o.to_obb()).collect::<Result<Vec<_>>>()?;
        if obbs.is_empty() {
            return Err(Error::UnknownPart("document has no boxes".into()));
        }
        let joints = self.joints.iter().map(|j| j.resolve(&obbs)).collect::<Result<_>>()?;
        Ok((obbs, joints))
    }

    /// The assembled object; the root is the first part that is never a child.
    pub fn to_object(&self) -> Result<ArticulatedObject> {
        let (obbs, joints) = self.resolve()?;
        let root = (0..obbs.len())
            .find(|p| joints.iter().all(|j| j.child != *p))
            .unwrap_or(0);
        let parts = obbs
            .into_iter()
            .enumerate()
            .map(|(i, o)| Part::from_obb(ArtCodeDocument::part_name(i), o))
            .collect();
        ArticulatedObject::new(parts, joints, root)
    }
}

/// Assembles the document and poses it. Empty `states` means all zeros.
pub fn execute(doc: &ArtCodeDocument, states: &[f64]) -> Result<(ArticulatedObject, Vec<RigidTransform>)> {
    let obj = doc.to_object()?;
    let zeros;
    let states = if states.is_empty() {
        zeros = vec![0.0; obj.joints.len()];
        &zeros
    } else {
        states
    };
    let transforms = forward_kinematics(&obj, states)?;
    Ok((obj, transforms))
}

#[derive(Debug, Clone, Default)]
pub struct MjcfOptions {
    /// When set, parts reference `<mesh_dir>/<part>.obj` (observed-pose
    /// meshes); otherwise each part is drawn as its box.
    pub mesh_dir: Option<String>,
    pub model_name: Option<String>,
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn fmt_vec(v: &Vec3) -> String {
    format!("{} {} {}", fmt_num(v.x), fmt_num(v.y), fmt_num(v.z))
}

fn quat_attr(t: &RigidTransform) -> Option<String> {
    if (t.rotation - crate::geom::Mat3::identity()).abs().max() < 1e-12 {
        return None;
    }
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(t.rotation));
    let q = if q.w < 0.0 { -q.into_inner() } else { q.into_inner() };
    Some(format!(
        " quat=\"{} {} {} {}\"",
        fmt_num(q.w),
        fmt_num(q.i),
        fmt_num(q.j),
        fmt_num(q.k)
    ))
}

fn pose_attrs(t: &RigidTransform) -> String {
    let mut s = format!(" pos=\"{}\"", fmt_vec(&t.translation));
    if let Some(q) = quat_attr(t) {
        s.push_str(&q);
    }
    s
}

/// MJCF model with one body per part, nested along the joint tree. Body
/// frames sit on the part boxes; joint axes and positions are expressed in
/// the child body frame.
pub fn export_mjcf(doc: &ArtCodeDocument, states: &[f64], opts: &MjcfOptions) -> Result<String> {
    let (obj, fk) = execute(doc, states)?;
    let n = obj.parts.len();
    let rest: Vec<RigidTransform> = obj.parts.iter().map(|p| p.obb.frame()).collect();
    let posed: Vec<RigidTransform> = (0..n).map(|i| fk[i].compose(&rest[i])).collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in &obj.joints {
        children[j.parent].push(j.child);
    }

    let name = opts.model_name.as_deref().unwrap_or("artcode");
    let mut out = String::new();
    let _ = writeln!(out, "<mujoco model=\"{}\">", xml_escape(name));
    let _ = writeln!(out, "  <compiler angle=\"radian\"/>");
    if let Some(dir) = &opts.mesh_dir {
        let _ = writeln!(out, "  <asset>");
        for p in &obj.parts {
            let file = if dir.is_empty() { format!("{}.obj", p.name) } else { format!("{}/{}.obj", dir.trim_end_matches('/'), p.name) };
            let _ = writeln!(out, "    <mesh name=\"{}\" file=\"{}\"/>", p.name, xml_escape(&file));
        }
        let _ = writeln!(out, "  </asset>");
    }
    let _ = writeln!(out, "  <worldbody>");

    struct Frame {
        part: usize,
        depth: usize,
        open: bool,
    }
    let mut stack = vec![Frame { part: obj.root, depth: 2, open: false }];
    while let Some(frame) = stack.pop() {
        let pad = "  ".repeat(frame.depth);
        let p = frame.part;
        if frame.open {
            let _ = writeln!(out, "{pad}</body>");
            continue;
        }
        let local = match obj.joint_into(p) {
            Some(ji) => posed[obj.joints[ji].parent].inverse().compose(&posed[p]),
            None => posed[p].clone(),
        };
        let part = &obj.parts[p];
        let _ = writeln!(out, "{pad}<body name=\"{}\"{}>", part.name, pose_attrs(&local));
        if let Some(ji) = obj.joint_into(p) {
            let j = &obj.joints[ji];
            let to_child = rest[p].inverse();
            let axis = to_child.apply_vector(&j.axis);
            let kind = match j.joint_type {
                JointType::Revolute => "hinge",
                JointType::Prismatic => "slide",
            };
            let pos = j.pivot.map(|q| to_child.apply_point(&q)).unwrap_or_else(Vec3::zeros);
            let _ = writeln!(
                out,
                "{pad}  <joint type=\"{kind}\" axis=\"{}\" pos=\"{}\" name=\"joint_{ji}\"/>",
                fmt_vec(&axis),
                fmt_vec(&pos)
            );
        }
        match &opts.mesh_dir {
            Some(_) => {
                let _ = writeln!(
                    out,
                    "{pad}  <geom type=\"mesh\" mesh=\"{}\"{}/>",
                    part.name,
                    pose_attrs(&rest[p].inverse())
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{pad}  <geom type=\"box\" size=\"{}\"/>",
                    fmt_vec(&part.obb.half_lengths)
                );
            }
        }
        stack.push(Frame { part: p, depth: frame.depth, open: true });
        for &c in children[p].iter().rev() {
            stack.push(Frame { part: c, depth: frame.depth + 1, open: false });
        }
    }
    let _ = writeln!(out, "  </worldbody>");
    out.push_str("</mujoco>\n");
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::articulation::{RelativeJoint, Sign};
    use crate::artcode::DocObb;
    use crate::geom::rotation_about;
    use std::f64::consts::FRAC_PI_2;

    fn boxed(center: [f64; 3], half: [f64; 3]) -> DocObb {
        DocObb::from_obb(&Obb::axis_aligned(Vec3::from(center), Vec3::from(half)).unwrap())
    }

    fn cabinet() -> ArtCodeDocument {
        let obbs = vec![boxed([0.0, 0.0, 0.0], [0.5, 0.4, 0.6]), boxed([0.55, 0.0, 0.0], [0.05, 0.4, 0.6])];
        let joint = RelativeJoint {
            joint_type: JointType::Revolute,
            parent: 0,
            child: 1,
            axis_idx: 2,
            axis_sign: Sign::Plus,
            edge_signs: Some((Sign::Plus, Sign::Plus)),
        };
        ArtCodeDocument::new(PredictionDialect::EdgeAxis, obbs, vec![DocJoint::EdgeAxis(joint)])
    }

    #[test]
    fn zero_states_identity() {
        let (_, t) = execute(&cabinet(), &[0.0]).unwrap();
        assert!(t.iter().all(|t| t.is_identity(0.0)));
    }

    #[test]
    fn door_swings_about_edge() {
        let (obj, t) = execute(&cabinet(), &[FRAC_PI_2]).unwrap();
        // hinge line: x = 0.6, y = 0.4, along +z
        let pivot = Vec3::new(0.6, 0.4, 0.0);
        let c = obj.parts[1].obb.center;
        let expected = pivot + rotation_about(&Vec3::z(), FRAC_PI_2) * (c - pivot);
        let moved = t[1].apply_point(&c);
        assert!((moved - expected).norm() < 1e-12);
        assert!((moved - Vec3::new(1.0, 0.35, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn joints_only_without_boxes() {
        let mut doc = cabinet();
        doc.obbs.clear();
        assert!(matches!(execute(&doc, &[0.0]), Err(Error::UnknownPart(_))));
    }

    #[test]
    fn mjcf_hinge_in_child_frame() {
        let obbs = vec![boxed([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]), boxed([2.0, 2.0, 0.0], [0.5, 0.5, 0.5])];
        let j = AbsoluteJoint {
            joint_type: JointType::Revolute,
            parent: 0,
            child: 1,
            axis: [0.0, 0.0, 1.0],
            pos: Some([1.0, 2.0, 0.0]),
        };
        let doc = ArtCodeDocument::new(PredictionDialect::AbsoluteNumeric, obbs, vec![DocJoint::Absolute(j)]);
        let xml = export_mjcf(&doc, &[], &MjcfOptions::default()).unwrap();
        assert!(xml.contains("<joint type=\"hinge\" axis=\"0 0 1\" pos=\"-1 0 0\" name=\"joint_0\"/>"), "{xml}");
        roxmltree::Document::parse(&xml).unwrap();
    }

    #[test]
    fn mjcf_slide_and_single_body() {
        let obbs = vec![boxed([0.0; 3], [1.0, 1.0, 1.0]), boxed([0.0, 0.0, 1.2], [0.3, 0.4, 0.2])];
        let rj = RelativeJoint {
            joint_type: JointType::Prismatic,
            parent: 0,
            child: 1,
            axis_idx: 2,
            axis_sign: Sign::Plus,
            edge_signs: None,
        };
        let doc = ArtCodeDocument::new(PredictionDialect::EdgeAxis, obbs.clone(), vec![DocJoint::EdgeAxis(rj)]);
        let xml = export_mjcf(&doc, &[0.3], &MjcfOptions { mesh_dir: Some("parts".into()), model_name: None }).unwrap();
        assert_eq!(xml.matches("<joint type=\"slide\"").count(), 1);
        let parsed = roxmltree::Document::parse(&xml).unwrap();
        let child = parsed.descendants().find(|n| n.has_tag_name("body") && n.attribute("name") == Some("bbox_1")).unwrap();
        assert_eq!(child.attribute("pos"), Some("0 0 1.5"));
        assert_eq!(child.parent().unwrap().attribute("name"), Some("bbox_0"));

        let single = ArtCodeDocument::new(PredictionDialect::EdgeAxis, obbs[..1].to_vec(), vec![]);
        let xml = export_mjcf(&single, &[], &MjcfOptions::default()).unwrap();
        let parsed = roxmltree::Document::parse(&xml).unwrap();
        assert_eq!(parsed.descendants().filter(|n| n.has_tag_name("body")).count(), 1);
        assert_eq!(parsed.descendants().filter(|n| n.has_tag_name("joint")).count(), 0);
    }

    #[test]
    fn encode_resolve_all_dialects() {
        let obb = Obb::axis_aligned(Vec3::new(0.55, 0.0, 0.0), Vec3::new(0.05, 0.4, 0.6)).unwrap();
        let j = Joint::revolute(0, 1, Vec3::z(), Vec3::new(0.6, 0.4, 0.0)).unwrap();
        let obbs = [Obb::axis_aligned(Vec3::zeros(), Vec3::repeat(0.5)).unwrap(), obb];
        for d in [PredictionDialect::EdgeAxis, PredictionDialect::AbsoluteNumeric, PredictionDialect::RelativeToCenter] {
            let back = DocJoint::encode(&j, &obb, d).unwrap().resolve(&obbs).unwrap();
            assert_eq!(back.axis, j.axis);
            assert!((back.pivot.unwrap() - j.pivot.unwrap()).norm() < 1e-12, "{d:?}");
        }
    }
}
