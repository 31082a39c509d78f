use std::f64::consts::PI;

use super::{GridSpec, OccupancyGrid};
use crate::geom::{TriMesh, Vec3};
use crate::{Error, Exec, Result};

const THRESHOLD: f64 = 0.5;
const AMBIGUOUS_BAND: f64 = 0.1;

/// Generalized winding number of a closed mesh about `p` (van Oosterom and
/// Strackee solid angles). About 1 inside, 0 outside.
pub fn winding_number(mesh: &TriMesh, p: &Vec3) -> f64 {
    let mut total = 0.0;
    for f in &mesh.faces {
        let a = mesh.vertices[f[0] as usize] - p;
        let b = mesh.vertices[f[1] as usize] - p;
        let c = mesh.vertices[f[2] as usize] - p;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * PI)
}

/// Crossings of the ray `p + t·e_axis`, `t > 0`, with the mesh.
fn ray_crossings(mesh: &TriMesh, p: &Vec3, axis: usize) -> usize {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut count = 0;
    for f in &mesh.faces {
        let a = mesh.vertices[f[0] as usize];
        let b = mesh.vertices[f[1] as usize];
        let c = mesh.vertices[f[2] as usize];
        // 2D point-in-triangle in the plane orthogonal to the ray
        let e = |s: &Vec3, t: &Vec3| (t[u] - s[u]) * (p[v] - s[v]) - (t[v] - s[v]) * (p[u] - s[u]);
        let (w0, w1, w2) = (e(&b, &c), e(&c, &a), e(&a, &b));
        let inside = (w0 > 0.0 && w1 > 0.0 && w2 > 0.0) || (w0 < 0.0 && w1 < 0.0 && w2 < 0.0);
        if !inside {
            continue;
        }
        let sum = w0 + w1 + w2;
        let hit = (w0 * a[axis] + w1 * b[axis] + w2 * c[axis]) / sum;
        if hit > p[axis] {
            count += 1;
        }
    }
    count
}

fn inside(mesh: &TriMesh, p: &Vec3) -> bool {
    let w = winding_number(mesh, p).abs();
    if (w - THRESHOLD).abs() >= AMBIGUOUS_BAND {
        return w > THRESHOLD;
    }
    let votes = (0..3).filter(|&a| ray_crossings(mesh, p, a) % 2 == 1).count();
    votes >= 2
}

/// Binary occupancy of every cell center. Orientation of the mesh does not
/// matter; it must be closed.
pub fn occupancy_from_mesh(mesh: &TriMesh, spec: &GridSpec) -> Result<OccupancyGrid> {
    occupancy_from_mesh_with(Exec::default(), mesh, spec)
}

pub fn occupancy_from_mesh_with(exec: Exec, mesh: &TriMesh, spec: &GridSpec) -> Result<OccupancyGrid> {
    let open = mesh.open_edge_count();
    if open > 0 || mesh.faces.is_empty() {
        return Err(Error::NotWatertight { open_edges: open });
    }
    let (lo, hi) = mesh.vertices.iter().fold(
        (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), v| (lo.inf(v), hi.sup(v)),
    );
    let values = exec.map_range(spec.len(), |idx| {
        let [i, j, k] = spec.cell(idx);
        let p = spec.cell_center(i, j, k);
        let in_bounds = (0..3).all(|a| p[a] >= lo[a] && p[a] <= hi[a]);
        (in_bounds && inside(mesh, &p)) as u8 as f32
    });
    OccupancyGrid::new(*spec, values)
}
