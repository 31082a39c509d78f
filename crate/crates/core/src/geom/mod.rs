//! Numerical substrate: vectors, rigid transforms, point clouds, meshes,
//! oriented bounding boxes, surface sampling and Chamfer distance.

pub(crate) mod chamfer;
mod cloud;
pub mod io;
mod kdtree;
mod mesh;
mod obb;
mod sample;
mod transform;

pub use chamfer::{chamfer, chamfer_with, CHAMFER_CONVENTION, CHAMFER_SCALE};
pub use cloud::PointCloud;
pub use kdtree::KdTree;
pub use mesh::TriMesh;
pub use obb::{fit_obb, fit_obb_points, Obb, DEGENERATE_EIGENVALUE, EPSILON_DEGENERATE};
pub use sample::sample_surface;
pub use transform::{is_rotation, rotation_about, rotx, roty, rotz, RigidTransform};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub fn transform_points(t: &RigidTransform, pc: &PointCloud) -> PointCloud {
    PointCloud {
        points: pc.points.iter().map(|p| t.apply_point(p)).collect(),
        labels: pc.labels.clone(),
    }
}

/// Squared Euclidean distance, summed in x, y, z order.
#[inline]
pub fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn transform_points_examples() {
        let pc = PointCloud::new(vec![Vec3::zeros()]);
        assert_eq!(transform_points(&RigidTransform::identity(), &pc), pc);

        let t = RigidTransform::from_translation(Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(transform_points(&t, &pc).points[0], Vec3::new(1.0, 0.0, 0.0));

        let r = RigidTransform::from_rotation(rotz(FRAC_PI_2));
        let out = transform_points(&r, &PointCloud::new(vec![Vec3::x()]));
        assert!((out.points[0] - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn labels_survive_transform() {
        let pc = PointCloud::with_labels(vec![Vec3::zeros(), Vec3::x()], vec![0, -1]).unwrap();
        let out = transform_points(&RigidTransform::from_translation(Vec3::z()), &pc);
        assert_eq!(out.labels, Some(vec![0, -1]));
    }
}
