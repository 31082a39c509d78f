use serde::{Deserialize, Serialize};

use super::{Mat3, Vec3};

/// `p ↦ rotation · p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::zeros())
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(Mat3::identity(), t)
    }

    pub fn from_rotation(r: Mat3) -> Self {
        Self::new(r, Vec3::zeros())
    }

    /// Rotation by `angle` about the line through `pivot` along unit `axis`.
    pub fn rotation_about_line(pivot: &Vec3, axis: &Vec3, angle: f64) -> Self {
        let r = rotation_about(axis, angle);
        Self::new(r, pivot - r * pivot)
    }

    /// URDF-style origin: `R = Rz(yaw) · Ry(pitch) · Rx(roll)`.
    pub fn from_xyz_rpy(xyz: Vec3, rpy: Vec3) -> Self {
        Self::new(rotz(rpy.z) * roty(rpy.y) * rotx(rpy.x), xyz)
    }

    #[inline]
    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform::new(rt, -(rt * self.translation))
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.rotation - Mat3::identity()).abs().max() <= tol && self.translation.abs().max() <= tol
    }
}

/// Rodrigues rotation about a unit axis.
pub fn rotation_about(axis: &Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    let k = Mat3::new(
        0.0, -axis.z, axis.y, //
        axis.z, 0.0, -axis.x, //
        -axis.y, axis.x, 0.0,
    );
    Mat3::identity() + k * s + k * k * (1.0 - c)
}

pub fn rotx(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn roty(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rotz(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `RᵀR = I` and `det R = +1`, both within `tol`.
pub fn is_rotation(r: &Mat3, tol: f64) -> bool {
    (r.transpose() * r - Mat3::identity()).abs().max() <= tol && (r.determinant() - 1.0).abs() <= tol
}
