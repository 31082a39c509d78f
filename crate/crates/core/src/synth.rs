//! Procedural fixtures: cabinet-like cuboid objects with doors and drawers,
//! a ray-cast depth and mask renderer, and a URDF writer. Used by tests,
//! benches and the CLI's fixture generator.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::articulation::{ArticulatedObject, Joint, JointType, Part};
use crate::fusion::{CameraView, Intrinsics, ScoredMask};
use crate::geom::io::write_obj;
use crate::geom::{fit_obb_points, Mat3, RigidTransform, TriMesh, Vec3};
use crate::ingest::{ObjectBundle, URDF_FILE};
use crate::{seed, Error, Result};

pub const MIN_PARTS: usize = 2;
pub const MAX_PARTS: usize = 10;
/// Clearance between neighbouring fronts.
const GAP: f64 = 0.01;
const FRONT_THICKNESS: f64 = 0.02;

fn cuboid_part(name: String, min: Vec3, max: Vec3) -> Result<Part> {
    let mesh = TriMesh::cuboid(min, max);
    Ok(Part {
        name,
        obb: fit_obb_points(&mesh.vertices)?,
        mesh: Some(mesh),
        cloud: None,
    })
}

/// A body box with `n_parts - 1` doors and drawers laid out on a grid over
/// its +x face. Doors hinge on a vertical edge of their slab, drawers slide
/// along +x. All boxes are axis-aligned with distinct half-lengths.
pub fn cabinet(id: &str, n_parts: usize, seed: u64) -> Result<ObjectBundle> {
    if !(MIN_PARTS..=MAX_PARTS).contains(&n_parts) {
        return Err(Error::InvalidValue(format!(
            "part count {n_parts} outside {MIN_PARTS}..={MAX_PARTS}"
        )));
    }
    let mut rng = seed::rng(seed::derive(seed, &format!("synth/{id}")));
    let hx = rng.gen_range(0.25..0.35);
    let hy = rng.gen_range(0.40..0.55);
    let hz = rng.gen_range(0.60..0.85);
    let mut parts = vec![cuboid_part("body".into(), Vec3::new(-hx, -hy, 0.0), Vec3::new(hx, hy, 2.0 * hz))?];
    let mut joints = Vec::new();
    let mut ranges = Vec::new();

    let k = n_parts - 1;
    let rows = (k as f64).sqrt().ceil() as usize;
    let cols = k.div_ceil(rows);
    let cell_w = 2.0 * hy / cols as f64;
    let cell_h = 2.0 * hz / rows as f64;
    for i in 0..k {
        let (r, c) = (i / cols, i % cols);
        // shave each cell a little differently so no slab is square
        let shave = GAP * (1.0 + 0.37 * rng.gen::<f64>());
        let y0 = -hy + c as f64 * cell_w + shave;
        let y1 = -hy + (c + 1) as f64 * cell_w - GAP;
        let z0 = r as f64 * cell_h + GAP;
        let z1 = (r + 1) as f64 * cell_h - GAP;
        let x_front = hx + FRONT_THICKNESS;
        if rng.gen_bool(0.5) {
            let name = format!("door_{i}");
            parts.push(cuboid_part(name, Vec3::new(hx, y0, z0), Vec3::new(x_front, y1, z1))?);
            let (y_hinge, axis) = if rng.gen_bool(0.5) { (y1, Vec3::z()) } else { (y0, -Vec3::z()) };
            let pivot = Vec3::new(x_front, y_hinge, 0.5 * (z0 + z1));
            joints.push(Joint::revolute(0, i + 1, axis, pivot)?);
            ranges.push(Some((0.0, std::f64::consts::FRAC_PI_2)));
        } else {
            let name = format!("drawer_{i}");
            let depth = rng.gen_range(0.5..0.9) * 2.0 * hx;
            parts.push(cuboid_part(name, Vec3::new(x_front - depth, y0, z0), Vec3::new(x_front, y1, z1))?);
            joints.push(Joint::prismatic(0, i + 1, Vec3::x())?);
            ranges.push(Some((0.0, 0.8 * depth)));
        }
    }
    Ok(ObjectBundle {
        id: id.to_string(),
        object: ArticulatedObject::new(parts, joints, 0)?,
        ranges,
    })
}

/// `n` cabinets with part counts cycling through 2..=10, ids `obj_0000`...
pub fn cabinet_set(n: usize, seed: u64) -> Result<Vec<ObjectBundle>> {
    (0..n)
        .map(|i| cabinet(&format!("obj_{i:04}"), MIN_PARTS + i % (MAX_PARTS - MIN_PARTS + 1), seed))
        .collect()
}

/// Writes `<dir>/mobility.urdf` and `<dir>/textured_objs/part_*.obj` so that
/// ingesting the directory reproduces the object. Joint frames sit at the
/// pivot (or at the parent frame for prismatic joints) with identity
/// orientation.
pub fn write_urdf_fixture(bundle: &ObjectBundle, dir: &Path) -> Result<()> {
    let obj = &bundle.object;
    let mesh_dir = dir.join("textured_objs");
    fs::create_dir_all(&mesh_dir).map_err(|e| Error::io(&mesh_dir, e))?;
    let mut frame = vec![Vec3::zeros(); obj.parts.len()];
    let mut order = vec![obj.root];
    let mut i = 0;
    while i < order.len() {
        let p = order[i];
        for j in obj.joints.iter().filter(|j| j.parent == p) {
            frame[j.child] = j.pivot.unwrap_or(frame[p]);
            order.push(j.child);
        }
        i += 1;
    }
    let mut xml = format!("<?xml version=\"1.0\"?>\n<robot name=\"{}\">\n", bundle.id);
    for (pi, part) in obj.parts.iter().enumerate() {
        let mesh = part.mesh.clone().unwrap_or_else(|| part.obb.to_mesh());
        let local = mesh.transformed(&RigidTransform::from_translation(-frame[pi]));
        let file = format!("textured_objs/part_{pi}.obj");
        write_obj(&dir.join(&file), &local)?;
        let _ = writeln!(
            xml,
            "  <link name=\"link_{pi}\">\n    <visual name=\"{}\">\n      <origin xyz=\"0 0 0\"/>\n      <geometry><mesh filename=\"{file}\"/></geometry>\n    </visual>\n  </link>",
            part.name
        );
    }
    for (ji, (j, range)) in obj.joints.iter().zip(&bundle.ranges).enumerate() {
        let kind = match (j.joint_type, range) {
            (JointType::Prismatic, _) => "prismatic",
            (JointType::Revolute, Some(_)) => "revolute",
            (JointType::Revolute, None) => "continuous",
        };
        let o = frame[j.child] - frame[j.parent];
        let _ = writeln!(
            xml,
            "  <joint name=\"joint_{ji}\" type=\"{kind}\">\n    <origin xyz=\"{} {} {}\" rpy=\"0 0 0\"/>\n    <axis xyz=\"{} {} {}\"/>\n    <parent link=\"link_{}\"/>\n    <child link=\"link_{}\"/>",
            o.x, o.y, o.z, j.axis.x, j.axis.y, j.axis.z, j.parent, j.child
        );
        if let Some((lo, hi)) = range {
            let _ = writeln!(xml, "    <limit lower=\"{lo}\" upper=\"{hi}\"/>");
        }
        xml.push_str("  </joint>\n");
    }
    xml.push_str("</robot>\n");
    let path = dir.join(URDF_FILE);
    fs::write(&path, xml).map_err(|e| Error::io(&path, e))
}

/// World-to-camera transform for a camera at `eye` looking at `target`
/// (x right, y down, z forward), with world +z as up.
pub fn look_at(eye: Vec3, target: Vec3) -> Result<RigidTransform> {
    let forward = target - eye;
    if forward.norm() < 1e-12 {
        return Err(Error::DegenerateGeometry("camera eye equals target".into()));
    }
    let forward = forward.normalize();
    let right = forward.cross(&Vec3::z());
    if right.norm() < 1e-9 {
        return Err(Error::DegenerateGeometry("camera looks straight up or down".into()));
    }
    let right = right.normalize();
    let down = forward.cross(&right);
    let r = Mat3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
    Ok(RigidTransform::new(r, -(r * eye)))
}

/// Pinhole with a `fov_deg` horizontal field of view, centered principal point.
pub fn intrinsics(width: usize, height: usize, fov_deg: f64) -> Intrinsics {
    let f = 0.5 * width as f64 / (0.5 * fov_deg.to_radians()).tan();
    Intrinsics {
        fx: f,
        fy: f,
        cx: 0.5 * (width as f64 - 1.0),
        cy: 0.5 * (height as f64 - 1.0),
        width,
        height,
    }
}

/// `n` cameras on an arc in front of the +x face, 25 degrees up, spread over
/// +-45 degrees of azimuth, all aimed at the object's box center.
pub fn front_cameras(obj: &ArticulatedObject, n: usize) -> Result<Vec<RigidTransform>> {
    let mesh = object_mesh(obj);
    let (lo, hi) = bounds(&mesh.vertices);
    let center = (lo + hi) * 0.5;
    let radius = 1.6 * (hi - lo).norm();
    let elev = 25f64.to_radians();
    (0..n)
        .map(|i| {
            let t = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
            let az = (-45.0 + 90.0 * t).to_radians();
            let eye = center + Vec3::new(az.cos() * elev.cos(), az.sin() * elev.cos(), elev.sin()) * radius;
            look_at(eye, center)
        })
        .collect()
}

fn object_mesh(obj: &ArticulatedObject) -> TriMesh {
    let meshes: Vec<TriMesh> = obj
        .parts
        .iter()
        .map(|p| p.mesh.clone().unwrap_or_else(|| p.obb.to_mesh()))
        .collect();
    TriMesh::merge(&meshes)
}

fn bounds(points: &[Vec3]) -> (Vec3, Vec3) {
    points.iter().fold(
        (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    )
}

/// Ray/triangle hit distance (Moller-Trumbore), front or back face.
fn ray_triangle(origin: &Vec3, dir: &Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 1e-9).then_some(t)
}

fn ray_box(origin: &Vec3, dir: &Vec3, lo: &Vec3, hi: &Vec3) -> bool {
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for a in 0..3 {
        if dir[a].abs() < 1e-15 {
            if origin[a] < lo[a] || origin[a] > hi[a] {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo[a] - origin[a]) / dir[a], (hi[a] - origin[a]) / dir[a]);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Rendered depth (camera z) and the part hit at each pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendering {
    pub view: CameraView,
    /// Part index per pixel, `None` for background.
    pub part_ids: Vec<Option<usize>>,
}

/// Ray-casts every pixel center against the part meshes. Each visible part
/// contributes one mask with the given confidence and stability 1.
pub fn render(obj: &ArticulatedObject, k: Intrinsics, world_to_cam: RigidTransform, confidence: f64) -> Result<Rendering> {
    let meshes: Vec<TriMesh> = obj
        .parts
        .iter()
        .map(|p| p.mesh.clone().unwrap_or_else(|| p.obb.to_mesh()))
        .collect();
    let boxes: Vec<(Vec3, Vec3)> = meshes.iter().map(|m| bounds(&m.vertices)).collect();
    let cam_to_world = world_to_cam.inverse();
    let eye = cam_to_world.translation;
    let n = k.width * k.height;
    let mut depth = vec![0f32; n];
    let mut part_ids = vec![None; n];
    for v in 0..k.height {
        for u in 0..k.width {
            let ray_cam = Vec3::new((u as f64 - k.cx) / k.fx, (v as f64 - k.cy) / k.fy, 1.0);
            let dir = cam_to_world.apply_vector(&ray_cam);
            let mut best: Option<(f64, usize)> = None;
            for (pi, mesh) in meshes.iter().enumerate() {
                if !ray_box(&eye, &dir, &boxes[pi].0, &boxes[pi].1) {
                    continue;
                }
                for f in 0..mesh.faces.len() {
                    if let Some(t) = ray_triangle(&eye, &dir, &mesh.triangle(f)) {
                        if best.map_or(true, |(bt, _)| t < bt) {
                            best = Some((t, pi));
                        }
                    }
                }
            }
            if let Some((t, pi)) = best {
                // ray_cam has unit z, so the ray parameter is the z-depth
                depth[v * k.width + u] = t as f32;
                part_ids[v * k.width + u] = Some(pi);
            }
        }
    }
    let mut masks = Vec::new();
    for pi in 0..obj.parts.len() {
        let bitmap: Vec<bool> = part_ids.iter().map(|&id| id == Some(pi)).collect();
        if bitmap.iter().any(|&b| b) {
            masks.push(ScoredMask::new(k.width, k.height, bitmap, confidence, 1.0)?);
        }
    }
    Ok(Rendering {
        view: CameraView::new(k, world_to_cam, depth, masks)?,
        part_ids,
    })
}

/// Renders `n_views` front views at `width x height`.
pub fn render_views(obj: &ArticulatedObject, n_views: usize, width: usize, height: usize) -> Result<Vec<Rendering>> {
    let k = intrinsics(width, height, 50.0);
    front_cameras(obj, n_views)?
        .into_iter()
        .map(|cam| render(obj, k, cam, 0.9))
        .collect()
}
