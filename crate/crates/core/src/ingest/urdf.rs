//! The URDF subset used by articulated-object datasets: links with mesh
//! visuals and revolute, continuous, prismatic or fixed joints.

use std::collections::{HashMap, VecDeque};

use crate::articulation::{ArticulatedObject, Joint, JointType, Part};
use crate::geom::{fit_obb_points, RigidTransform, TriMesh, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MeshRef {
    pub filename: String,
    pub origin: RigidTransform,
    pub scale: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UrdfLink {
    pub name: String,
    pub meshes: Vec<MeshRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UrdfJointKind {
    Revolute,
    Continuous,
    Prismatic,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UrdfJoint {
    pub name: String,
    pub kind: UrdfJointKind,
    pub parent: String,
    pub child: String,
    pub origin: RigidTransform,
    /// Unit axis in the joint frame.
    pub axis: Vec3,
    pub limit: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UrdfModel {
    pub name: String,
    pub links: Vec<UrdfLink>,
    pub joints: Vec<UrdfJoint>,
    pub root: String,
    /// Elements that were skipped.
    pub warnings: Vec<String>,
}

fn numbers<const N: usize>(node: roxmltree::Node, attr: &str, default: [f64; N]) -> Result<[f64; N]> {
    let Some(text) = node.attribute(attr) else {
        return Ok(default);
    };
    let vals: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidValue(format!("bad number list `{text}` in <{}>", node.tag_name().name())))?;
    vals.try_into()
        .map_err(|_| Error::InvalidValue(format!("expected {N} numbers in `{text}`")))
}

fn origin_of(node: roxmltree::Node) -> Result<RigidTransform> {
    match node.children().find(|c| c.has_tag_name("origin")) {
        Some(o) => {
            let xyz = numbers(o, "xyz", [0.0; 3])?;
            let rpy = numbers(o, "rpy", [0.0; 3])?;
            Ok(RigidTransform::from_xyz_rpy(Vec3::from(xyz), Vec3::from(rpy)))
        }
        None => Ok(RigidTransform::identity()),
    }
}

pub fn parse_urdf(xml: &str) -> Result<UrdfModel> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        Error::syntax(pos.row as usize, pos.col as usize, e.to_string())
    })?;
    let robot = doc.root_element();
    if !robot.has_tag_name("robot") {
        return Err(Error::syntax(1, 1, "root element is not <robot>"));
    }
    let mut warnings = Vec::new();
    let mut links = Vec::new();
    for link in robot.children().filter(|n| n.has_tag_name("link")) {
        let name = link
            .attribute("name")
            .ok_or_else(|| Error::InvalidValue("<link> without name".into()))?
            .to_string();
        let mut meshes = Vec::new();
        for kind in ["visual", "collision"] {
            for el in link.children().filter(|n| n.has_tag_name(kind)) {
                let Some(geom) = el.children().find(|n| n.has_tag_name("geometry")) else {
                    continue;
                };
                for g in geom.children().filter(|n| n.is_element()) {
                    if g.has_tag_name("mesh") {
                        let filename = g
                            .attribute("filename")
                            .ok_or_else(|| Error::InvalidValue(format!("mesh without filename in link `{name}`")))?;
                        meshes.push(MeshRef {
                            filename: filename.to_string(),
                            origin: origin_of(el)?,
                            scale: Vec3::from(numbers(g, "scale", [1.0; 3])?),
                        });
                    } else {
                        warnings.push(format!("link `{name}`: ignored <{}> geometry", g.tag_name().name()));
                    }
                }
            }
            // collision meshes only stand in when there are no visuals
            if !meshes.is_empty() {
                break;
            }
        }
        links.push(UrdfLink { name, meshes });
    }
    let mut seen = std::collections::HashSet::new();
    for l in &links {
        if !seen.insert(l.name.as_str()) {
            return Err(Error::InvalidValue(format!("duplicate link `{}`", l.name)));
        }
    }

    let mut joints = Vec::new();
    for j in robot.children().filter(|n| n.has_tag_name("joint")) {
        let name = j.attribute("name").unwrap_or("").to_string();
        let kind_str = j.attribute("type").unwrap_or("");
        let kind = match kind_str {
            "revolute" => UrdfJointKind::Revolute,
            "continuous" => UrdfJointKind::Continuous,
            "prismatic" => UrdfJointKind::Prismatic,
            "fixed" => UrdfJointKind::Fixed,
            other => {
                return Err(Error::UnsupportedJoint {
                    joint: name,
                    kind: other.to_string(),
                })
            }
        };
        let link_ref = |tag: &str| -> Result<String> {
            let l = j
                .children()
                .find(|n| n.has_tag_name(tag))
                .and_then(|n| n.attribute("link"))
                .ok_or_else(|| Error::UnresolvedLink(format!("joint `{name}` has no {tag}")))?;
            if !seen.contains(l) {
                return Err(Error::UnresolvedLink(l.to_string()));
            }
            Ok(l.to_string())
        };
        let parent = link_ref("parent")?;
        let child = link_ref("child")?;
        let axis = match j.children().find(|n| n.has_tag_name("axis")) {
            Some(a) => Vec3::from(numbers(a, "xyz", [1.0, 0.0, 0.0])?),
            None => Vec3::x(),
        };
        if kind != UrdfJointKind::Fixed && !(axis.norm() > 1e-12) {
            return Err(Error::InvalidValue(format!("joint `{name}` has a zero axis")));
        }
        let limit = match (kind, j.children().find(|n| n.has_tag_name("limit"))) {
            (UrdfJointKind::Revolute | UrdfJointKind::Prismatic, Some(l)) => {
                match (l.attribute("lower"), l.attribute("upper")) {
                    (Some(lo), Some(hi)) => {
                        let lo: f64 = lo.parse().map_err(|_| Error::InvalidValue(format!("bad lower limit on `{name}`")))?;
                        let hi: f64 = hi.parse().map_err(|_| Error::InvalidValue(format!("bad upper limit on `{name}`")))?;
                        (hi > lo).then_some((lo, hi))
                    }
                    _ => None,
                }
            }
            _ => None,
        };
        joints.push(UrdfJoint {
            name,
            kind,
            parent,
            child,
            origin: origin_of(j)?,
            axis: if axis.norm() > 0.0 { axis.normalize() } else { axis },
            limit,
        });
    }
    for other in robot.children().filter(|n| n.is_element() && !n.has_tag_name("link") && !n.has_tag_name("joint")) {
        warnings.push(format!("ignored <{}>", other.tag_name().name()));
    }

    let roots: Vec<&UrdfLink> = links
        .iter()
        .filter(|l| joints.iter().all(|j| j.child != l.name))
        .collect();
    if roots.len() != 1 {
        return Err(Error::InvalidTree(format!("expected exactly one root link, found {}", roots.len())));
    }
    let root = roots[0].name.clone();
    Ok(UrdfModel {
        name: robot.attribute("name").unwrap_or("").to_string(),
        links,
        joints,
        root,
        warnings,
    })
}

impl UrdfModel {
    /// World pose of every link with all joints at zero.
    pub fn link_frames(&self) -> Result<HashMap<String, RigidTransform>> {
        let mut frames = HashMap::from([(self.root.clone(), RigidTransform::identity())]);
        let mut queue = VecDeque::from([self.root.clone()]);
        while let Some(l) = queue.pop_front() {
            for j in self.joints.iter().filter(|j| j.parent == l) {
                if frames.contains_key(&j.child) {
                    return Err(Error::InvalidTree(format!("link `{}` reached twice", j.child)));
                }
                frames.insert(j.child.clone(), frames[&l].compose(&j.origin));
                queue.push_back(j.child.clone());
            }
        }
        if frames.len() != self.links.len() {
            return Err(Error::InvalidTree("some links are not connected to the root".into()));
        }
        Ok(frames)
    }

    /// Joint axis in world coordinates at zero state.
    pub fn world_axis(&self, joint: &UrdfJoint) -> Result<Vec3> {
        let frames = self.link_frames()?;
        let f = frames[&joint.parent].compose(&joint.origin);
        Ok(f.apply_vector(&joint.axis))
    }
}

/// Link groups joined by fixed joints: `(group of each link, top link of each group)`.
fn fixed_groups(model: &UrdfModel) -> (HashMap<String, usize>, Vec<String>) {
    let mut group: HashMap<String, usize> = HashMap::new();
    let mut tops = vec![model.root.clone()];
    group.insert(model.root.clone(), 0);
    let mut queue = VecDeque::from([model.root.clone()]);
    while let Some(l) = queue.pop_front() {
        for j in model.joints.iter().filter(|j| j.parent == l) {
            let g = if j.kind == UrdfJointKind::Fixed {
                group[&l]
            } else {
                tops.push(j.child.clone());
                tops.len() - 1
            };
            group.insert(j.child.clone(), g);
            queue.push_back(j.child.clone());
        }
    }
    (group, tops)
}

/// One part per movable link (plus the root), each holding the merged world
/// meshes of its link and every link attached to it by fixed joints. Parts
/// come in breadth-first order of their top links.
pub fn group_part_meshes(model: &UrdfModel, load_mesh: &dyn Fn(&str) -> Result<TriMesh>) -> Result<Vec<Part>> {
    let frames = model.link_frames()?;
    let (group, tops) = fixed_groups(model);
    let mut meshes: Vec<Vec<TriMesh>> = vec![Vec::new(); tops.len()];
    for link in &model.links {
        for m in &link.meshes {
            let raw = load_mesh(&m.filename)?;
            let scaled = TriMesh {
                vertices: raw.vertices.iter().map(|v| v.component_mul(&m.scale)).collect(),
                faces: raw.faces,
            };
            let to_world = frames[&link.name].compose(&m.origin);
            meshes[group[&link.name]].push(scaled.transformed(&to_world));
        }
    }
    tops.iter()
        .zip(meshes)
        .map(|(name, parts)| {
            if parts.is_empty() {
                return Err(Error::MissingMesh(format!("part `{name}` has no mesh")));
            }
            let mesh = TriMesh::merge(&parts);
            let obb = fit_obb_points(&mesh.vertices)?;
            Ok(Part {
                name: name.clone(),
                mesh: Some(mesh),
                cloud: None,
                obb,
            })
        })
        .collect()
}

/// The articulated object at zero state plus each joint's state range from
/// the URDF limits (`None` for continuous or unlimited joints).
pub fn urdf_to_object(
    model: &UrdfModel,
    load_mesh: &dyn Fn(&str) -> Result<TriMesh>,
) -> Result<(ArticulatedObject, Vec<Option<(f64, f64)>>)> {
    let parts = group_part_meshes(model, load_mesh)?;
    let frames = model.link_frames()?;
    let (group, _) = fixed_groups(model);
    let mut joints = Vec::new();
    let mut ranges = Vec::new();
    for j in model.joints.iter().filter(|j| j.kind != UrdfJointKind::Fixed) {
        let at = frames[&j.parent].compose(&j.origin);
        let axis = at.apply_vector(&j.axis).normalize();
        let (joint_type, pivot) = match j.kind {
            UrdfJointKind::Prismatic => (JointType::Prismatic, None),
            _ => (JointType::Revolute, Some(at.translation)),
        };
        joints.push(Joint::new(joint_type, group[&j.parent], group[&j.child], axis, pivot)?);
        ranges.push(if j.kind == UrdfJointKind::Continuous { None } else { j.limit });
    }
    Ok((ArticulatedObject::new(parts, joints, 0)?, ranges))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LINK: &str = r#"<?xml version="1.0"?>
<robot name="box">
  <link name="base"><visual><geometry><mesh filename="base.obj"/></geometry></visual></link>
  <link name="lid"><visual><origin xyz="0 0 0.5"/><geometry><mesh filename="lid.obj" scale="1 1 0.1"/></geometry></visual></link>
  <joint name="hinge" type="revolute">
    <parent link="base"/><child link="lid"/>
    <origin xyz="0 0.5 0.5" rpy="0 0 1.5707963267948966"/>
    <axis xyz="1 0 0"/>
    <limit lower="0" upper="1.5"/>
  </joint>
</robot>"#;

    fn unit_box(_: &str) -> Result<TriMesh> {
        Ok(TriMesh::cuboid(Vec3::repeat(-0.5), Vec3::repeat(0.5)))
    }

    #[test]
    fn minimal_revolute() {
        let m = parse_urdf(TWO_LINK).unwrap();
        assert_eq!(m.links.len(), 2);
        assert_eq!(m.joints.len(), 1);
        assert_eq!(m.joints[0].kind, UrdfJointKind::Revolute);
        assert_eq!(m.joints[0].axis, Vec3::x());
        assert_eq!(m.joints[0].limit, Some((0.0, 1.5)));
        assert_eq!(m.root, "base");
        // rpy yaw of pi/2 turns the x axis into y
        let w = m.world_axis(&m.joints[0]).unwrap();
        assert!((w - Vec3::y()).norm() < 1e-15);
    }

    #[test]
    fn object_from_urdf() {
        let m = parse_urdf(TWO_LINK).unwrap();
        let (obj, ranges) = urdf_to_object(&m, &unit_box).unwrap();
        assert_eq!(obj.parts.len(), 2);
        assert_eq!(ranges, vec![Some((0.0, 1.5))]);
        let j = &obj.joints[0];
        assert_eq!(j.pivot, Some(Vec3::new(0.0, 0.5, 0.5)));
        // lid mesh: scaled to 0.1 thick, offset 0.5 along the joint frame z
        let lid = &obj.parts[1].obb;
        assert!((lid.center - Vec3::new(0.0, 0.5, 1.0)).norm() < 1e-12);
        assert!((lid.half_lengths.min() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_planar_and_dangling() {
        let planar = TWO_LINK.replace("type=\"revolute\"", "type=\"planar\"");
        assert!(matches!(parse_urdf(&planar), Err(Error::UnsupportedJoint { .. })));
        let dangling = TWO_LINK.replace("<child link=\"lid\"/>", "<child link=\"nope\"/>");
        assert!(matches!(parse_urdf(&dangling), Err(Error::UnresolvedLink(l)) if l == "nope"));
        assert!(matches!(parse_urdf("<robot><link"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn fixed_links_merge_into_root() {
        let xml = r#"<robot name="drawer">
  <link name="base"><visual><geometry><mesh filename="a.obj"/></geometry></visual></link>
  <link name="trim"><visual><geometry><mesh filename="b.obj"/></geometry></visual></link>
  <link name="drawer">
    <visual><geometry><mesh filename="p1.obj"/></geometry></visual>
    <visual><geometry><mesh filename="p2.obj"/></geometry></visual>
    <visual><geometry><mesh filename="p3.obj"/></geometry></visual>
    <visual><geometry><mesh filename="p4.obj"/></geometry></visual>
    <visual><geometry><mesh filename="p5.obj"/></geometry></visual>
  </link>
  <link name="door"><visual><geometry><mesh filename="d.obj"/></geometry></visual></link>
  <joint name="f" type="fixed"><parent link="base"/><child link="trim"/><origin xyz="0 0 2"/></joint>
  <joint name="slide" type="prismatic"><parent link="base"/><child link="drawer"/><origin xyz="1 0 0"/><axis xyz="1 0 0"/></joint>
  <joint name="spin" type="continuous"><parent link="trim"/><child link="door"/><origin xyz="0 1 0"/><axis xyz="0 0 1"/></joint>
</robot>"#;
        let m = parse_urdf(xml).unwrap();
        let parts = group_part_meshes(&m, &unit_box).unwrap();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0].name, "base");
        assert_eq!(parts[0].mesh.as_ref().unwrap().vertices.len(), 16);
        assert_eq!(parts[1].mesh.as_ref().unwrap().vertices.len(), 40);
        let (obj, ranges) = urdf_to_object(&m, &unit_box).unwrap();
        assert_eq!(ranges, vec![None, None]);
        // the door hangs off the fixed trim, so its parent is the root part
        assert_eq!(obj.joints[1].parent, 0);
        assert_eq!(obj.joints[1].pivot, Some(Vec3::new(0.0, 1.0, 2.0)));
        assert!(matches!(
            group_part_meshes(&m, &|f: &str| Err(Error::MissingMesh(f.to_string()))),
            Err(Error::MissingMesh(_))
        ));
    }

    #[test]
    fn continuous_maps_to_revolute() {
        let xml = TWO_LINK.replace("type=\"revolute\"", "type=\"continuous\"");
        let m = parse_urdf(&xml).unwrap();
        let (obj, ranges) = urdf_to_object(&m, &unit_box).unwrap();
        assert_eq!(obj.joints[0].joint_type, JointType::Revolute);
        assert_eq!(ranges, vec![None]);
    }
}
