use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{RigidTransform, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
            return Err(Error::InvalidValue(format!(
                "face {f:?} references a vertex beyond {n}"
            )));
        }
        Ok(Self { vertices, faces })
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Number of undirected edges not shared by exactly two faces.
    pub fn open_edge_count(&self) -> usize {
        let mut counts: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        counts.values().filter(|&&c| c != 2).count()
    }

    pub fn is_watertight(&self) -> bool {
        !self.faces.is_empty() && self.open_edge_count() == 0
    }

    pub fn transformed(&self, t: &RigidTransform) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| t.apply_point(v)).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Concatenates meshes, offsetting face indices.
    pub fn merge<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> TriMesh {
        let mut out = TriMesh::default();
        for m in meshes {
            let base = out.vertices.len() as u32;
            out.vertices.extend_from_slice(&m.vertices);
            out.faces
                .extend(m.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        }
        out
    }

    /// Axis-aligned box `[min, max]` with outward-facing triangles.
    pub fn cuboid(min: Vec3, max: Vec3) -> TriMesh {
        let corners = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { min.x } else { max.x },
                    if i & 2 == 0 { min.y } else { max.y },
                    if i & 4 == 0 { min.z } else { max.z },
                )
            })
            .collect();
        let faces = vec![
            [0, 2, 1], [1, 2, 3], // -z
            [4, 5, 6], [5, 7, 6], // +z
            [0, 1, 4], [1, 5, 4], // -y
            [2, 6, 3], [3, 6, 7], // +y
            [0, 4, 2], [2, 4, 6], // -x
            [1, 3, 5], [3, 7, 5], // +x
        ];
        TriMesh {
            vertices: corners,
            faces,
        }
    }

    /// Signed volume via the divergence theorem; positive for outward faces.
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cuboid_is_closed_and_outward() {
        let m = TriMesh::cuboid(Vec3::new(-0.5, -0.5, -0.5), Vec3::new(0.5, 1.5, 0.5));
        assert!(m.is_watertight());
        assert!((m.signed_volume() - 2.0).abs() < 1e-12);
        assert!((m.area() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn open_box_is_detected() {
        let mut m = TriMesh::cuboid(Vec3::zeros(), Vec3::repeat(1.0));
        m.faces.truncate(10);
        assert!(!m.is_watertight());
        assert_eq!(m.open_edge_count(), 4);
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(TriMesh::new(vec![Vec3::zeros()], vec![[0, 0, 1]]).is_err());
    }

    #[test]
    fn merge_offsets_faces() {
        let a = TriMesh::cuboid(Vec3::zeros(), Vec3::repeat(1.0));
        let m = TriMesh::merge([&a, &a]);
        assert_eq!(m.vertices.len(), 16);
        assert_eq!(m.faces[12], [8, 10, 9]);
    }
}
