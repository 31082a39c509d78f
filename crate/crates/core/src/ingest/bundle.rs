//! On-disk object bundle: `object.json` plus one OBJ per part under `parts/`.
//! Ingest writes these; reconstruction writes the same layout, so the
//! evaluator reads predictions and ground truth alike.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::urdf::{parse_urdf, urdf_to_object};
use crate::articulation::{ArticulatedObject, Joint, JointType, Part};
use crate::geom::io::{read_obj, write_obj};
use crate::geom::{Mat3, Obb, Vec3};
use crate::{Error, Result};

pub const BUNDLE_FORMAT: &str = "artkit-object";
pub const BUNDLE_VERSION: u32 = 1;
pub const URDF_FILE: &str = "mobility.urdf";

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectBundle {
    pub id: String,
    pub object: ArticulatedObject,
    /// State range per joint, `None` where the source gave no limits.
    pub ranges: Vec<Option<(f64, f64)>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleFile {
    format: String,
    version: u32,
    id: String,
    root: usize,
    parts: Vec<BundlePart>,
    joints: Vec<BundleJoint>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundlePart {
    name: String,
    center: [f64; 3],
    /// Row-major; columns are the box axes.
    rotation: [[f64; 3]; 3],
    half_lengths: [f64; 3],
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    degenerate: bool,
    mesh: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleJoint {
    #[serde(rename = "type")]
    joint_type: JointType,
    parent: usize,
    child: usize,
    axis: [f64; 3],
    pivot: Option<[f64; 3]>,
    #[serde(default)]
    state: f64,
    range: Option<[f64; 2]>,
}

/// Mesh file stems: the part name made filename-safe, with the part index
/// appended when two names collide.
fn file_stems(parts: &[Part]) -> Vec<String> {
    let clean: Vec<String> = parts
        .iter()
        .map(|p| {
            p.name
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                .collect()
        })
        .collect();
    clean
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.is_empty() || clean.iter().filter(|o| *o == c).count() > 1 {
                format!("{c}_{i}")
            } else {
                c.clone()
            }
        })
        .collect()
}

impl ObjectBundle {
    pub fn new(id: impl Into<String>, object: ArticulatedObject) -> Self {
        let ranges = vec![None; object.joints.len()];
        ObjectBundle {
            id: id.into(),
            object,
            ranges,
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let parts_dir = dir.join("parts");
        fs::create_dir_all(&parts_dir).map_err(|e| Error::io(&parts_dir, e))?;
        let stems = file_stems(&self.object.parts);
        let mut parts = Vec::with_capacity(self.object.parts.len());
        for (p, stem) in self.object.parts.iter().zip(&stems) {
            let mesh = match &p.mesh {
                Some(m) => {
                    let rel = format!("parts/{stem}.obj");
                    write_obj(&dir.join(&rel), m)?;
                    Some(rel)
                }
                None => None,
            };
            parts.push(BundlePart {
                name: p.name.clone(),
                center: p.obb.center.into(),
                rotation: std::array::from_fn(|r| std::array::from_fn(|c| p.obb.rotation[(r, c)])),
                half_lengths: p.obb.half_lengths.into(),
                degenerate: p.obb.degenerate,
                mesh,
            });
        }
        let joints = self
            .object
            .joints
            .iter()
            .zip(&self.ranges)
            .map(|(j, r)| BundleJoint {
                joint_type: j.joint_type,
                parent: j.parent,
                child: j.child,
                axis: j.axis.into(),
                pivot: j.pivot.map(Into::into),
                state: j.state,
                range: r.map(|(a, b)| [a, b]),
            })
            .collect();
        let file = BundleFile {
            format: BUNDLE_FORMAT.into(),
            version: BUNDLE_VERSION,
            id: self.id.clone(),
            root: self.object.root,
            parts,
            joints,
        };
        let path = dir.join("object.json");
        let text = serde_json::to_string_pretty(&file).expect("bundle serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("object.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let file: BundleFile = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
        if file.format != BUNDLE_FORMAT {
            return Err(Error::format(&path, format!("not an {BUNDLE_FORMAT} file")));
        }
        if file.version != BUNDLE_VERSION {
            return Err(Error::format(&path, format!("unsupported version {}", file.version)));
        }
        let mut parts = Vec::with_capacity(file.parts.len());
        for p in file.parts {
            let mut obb = Obb::new(
                Vec3::from(p.center),
                Mat3::from_fn(|r, c| p.rotation[r][c]),
                Vec3::from(p.half_lengths),
            )
            .map_err(|e| Error::format(&path, format!("part `{}`: {e}", p.name)))?;
            obb.degenerate = p.degenerate;
            let mesh = match p.mesh {
                Some(rel) => Some(read_obj(&dir.join(rel))?),
                None => None,
            };
            parts.push(Part {
                name: p.name,
                mesh,
                cloud: None,
                obb,
            });
        }
        let mut joints = Vec::with_capacity(file.joints.len());
        let mut ranges = Vec::with_capacity(file.joints.len());
        for j in file.joints {
            let mut joint = Joint::new(j.joint_type, j.parent, j.child, Vec3::from(j.axis), j.pivot.map(Vec3::from))
                .map_err(|e| Error::format(&path, e.to_string()))?;
            joint.state = j.state;
            joints.push(joint);
            ranges.push(j.range.map(|[a, b]| (a, b)));
        }
        Ok(ObjectBundle {
            id: file.id,
            object: ArticulatedObject::new(parts, joints, file.root)?,
            ranges,
        })
    }

    /// Reads `<dir>/mobility.urdf`; mesh paths resolve against `dir` (a
    /// leading `package://` is dropped). The id is the directory name.
    pub fn from_urdf_dir(dir: &Path) -> Result<Self> {
        let urdf_path = dir.join(URDF_FILE);
        let xml = fs::read_to_string(&urdf_path).map_err(|e| Error::io(&urdf_path, e))?;
        let model = parse_urdf(&xml)?;
        let load = |f: &str| {
            let rel = f.strip_prefix("package://").unwrap_or(f);
            let p = dir.join(rel);
            if !p.is_file() {
                return Err(Error::MissingMesh(p.display().to_string()));
            }
            read_obj(&p)
        };
        let (object, ranges) = urdf_to_object(&model, &load)?;
        let id = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| model.name.clone());
        Ok(ObjectBundle { id, object, ranges })
    }
}

/// Subdirectories of `root` holding `object.json`, sorted by name.
pub fn bundle_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    sorted_subdirs(root, "object.json")
}

/// Subdirectories of `root` holding a URDF, sorted by name.
pub fn urdf_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    sorted_subdirs(root, URDF_FILE)
}

fn sorted_subdirs(root: &Path, marker: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let p = entry.map_err(|e| Error::io(root, e))?.path();
        if p.join(marker).is_file() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::TriMesh;

    fn hinged() -> ArticulatedObject {
        let base = TriMesh::cuboid(Vec3::new(-0.5, -0.5, 0.0), Vec3::new(0.5, 0.5, 0.2));
        let lid_obb = Obb::axis_aligned(Vec3::new(0.0, 0.0, 0.25), Vec3::new(0.5, 0.5, 0.05)).unwrap();
        let base_part = Part {
            name: "base link".into(),
            mesh: Some(base.clone()),
            cloud: None,
            obb: crate::geom::fit_obb_points(&base.vertices).unwrap(),
        };
        let j = Joint::revolute(0, 1, Vec3::x(), Vec3::new(0.0, -0.5, 0.2)).unwrap();
        ArticulatedObject::new(vec![base_part, Part::from_obb("lid", lid_obb)], vec![j], 0).unwrap()
    }

    #[test]
    fn save_load_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = ObjectBundle::new("obj_1", hinged());
        b.ranges[0] = Some((0.0, 1.2));
        b.save(dir.path()).unwrap();
        assert!(dir.path().join("parts/base_link.obj").is_file());
        let back = ObjectBundle::load(dir.path()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn wrong_format_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("object.json"), r#"{"format":"x","version":1,"id":"a","root":0,"parts":[],"joints":[]}"#).unwrap();
        assert!(matches!(ObjectBundle::load(dir.path()), Err(Error::Format { .. })));
    }
}
