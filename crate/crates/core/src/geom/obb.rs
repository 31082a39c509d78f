use serde::{Deserialize, Serialize};

use super::{is_rotation, Mat3, PointCloud, RigidTransform, TriMesh, Vec3};
use crate::{Error, Result};

/// Smallest half-length a box may have.
pub const EPSILON_DEGENERATE: f64 = 1e-6;
/// Covariance eigenvalues below this count as collapsed directions.
pub const DEGENERATE_EIGENVALUE: f64 = 1e-12;
/// Relative off-diagonal covariance below which the fit keeps world axes.
const AXIS_SNAP: f64 = 1e-12;

/// Oriented bounding box. Columns of `rotation` are the box axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub center: Vec3,
    pub rotation: Mat3,
    pub half_lengths: Vec3,
    /// Set by [`fit_obb`] when two or more directions collapsed.
    #[serde(default)]
    pub degenerate: bool,
}

impl Obb {
    pub fn new(center: Vec3, rotation: Mat3, half_lengths: Vec3) -> Result<Self> {
        if !is_rotation(&rotation, 1e-9) {
            return Err(Error::InvalidValue(format!(
                "OBB rotation is not a proper rotation: {rotation:?}"
            )));
        }
        if half_lengths.iter().any(|&h| !(h >= EPSILON_DEGENERATE)) {
            return Err(Error::InvalidValue(format!(
                "OBB half-lengths must be >= {EPSILON_DEGENERATE}: {half_lengths:?}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidValue("OBB center is not finite".into()));
        }
        Ok(Self {
            center,
            rotation,
            half_lengths,
            degenerate: false,
        })
    }

    pub fn axis_aligned(center: Vec3, half_lengths: Vec3) -> Result<Self> {
        Self::new(center, Mat3::identity(), half_lengths)
    }

    pub fn axis(&self, i: usize) -> Vec3 {
        self.rotation.column(i).into_owned()
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.center)
    }

    pub fn contains(&self, p: &Vec3, inflate: f64) -> bool {
        let l = self.to_local(p);
        (0..3).all(|i| l[i].abs() <= self.half_lengths[i] + inflate)
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_lengths.product()
    }

    /// Box frame: maps box-local coordinates to world.
    pub fn frame(&self) -> RigidTransform {
        RigidTransform::new(self.rotation, self.center)
    }

    pub fn corners(&self) -> [Vec3; 8] {
        std::array::from_fn(|i| {
            let s = Vec3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            );
            self.center + self.rotation * s.component_mul(&self.half_lengths)
        })
    }

    pub fn to_mesh(&self) -> TriMesh {
        TriMesh::cuboid(-self.half_lengths, self.half_lengths).transformed(&self.frame())
    }

    /// Rigidly moves the box; the flag is carried over.
    pub fn transformed(&self, t: &RigidTransform) -> Obb {
        Obb {
            center: t.apply_point(&self.center),
            rotation: t.rotation * self.rotation,
            half_lengths: self.half_lengths,
            degenerate: self.degenerate,
        }
    }

    /// Re-applies the axis sign convention of [`fit_obb`] without reordering
    /// axes: each of the first two columns gets its largest-magnitude component
    /// positive and the third is their cross product.
    pub fn canonicalized(&self) -> Obb {
        let r0 = sign_fixed(self.axis(0));
        let r1 = sign_fixed(self.axis(1));
        let r2 = r0.cross(&r1);
        Obb {
            rotation: Mat3::from_columns(&[r0, r1, r2]),
            ..*self
        }
    }
}

fn sign_fixed(v: Vec3) -> Vec3 {
    let idx = v.iamax();
    if v[idx] < 0.0 {
        -v
    } else {
        v
    }
}

/// PCA box: axes are covariance eigenvectors in descending eigenvalue order,
/// signs normalized so each axis's largest component is positive, with the
/// third axis closed as `r0 × r1`. Extents are the min/max projections.
/// A covariance that is diagonal up to round-off keeps the world axes.
///
/// Collinear or coincident input still yields a box (half-lengths clamped to
/// [`EPSILON_DEGENERATE`]) with `degenerate` set.
pub fn fit_obb(points: &PointCloud) -> Result<Obb> {
    fit_obb_points(&points.points)
}

pub fn fit_obb_points(points: &[Vec3]) -> Result<Obb> {
    if points.is_empty() {
        return Err(Error::EmptyInput("fit_obb needs at least one point"));
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;

    // a covariance that is diagonal up to round-off keeps the world axes
    let off = cov[(0, 1)].abs().max(cov[(0, 2)].abs()).max(cov[(1, 2)].abs());
    let (eigenvalues, eigenvectors) = if off <= AXIS_SNAP * cov.trace() {
        (cov.diagonal(), Mat3::identity())
    } else {
        let eig = nalgebra::SymmetricEigen::new(cov);
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    let collapsed = eigenvalues
        .iter()
        .filter(|&&l| l < DEGENERATE_EIGENVALUE)
        .count();

    let r0 = sign_fixed(eigenvectors.column(order[0]).normalize());
    let mut r1 = eigenvectors.column(order[1]).into_owned();
    // re-orthogonalize against r0 before closing the frame
    r1 = sign_fixed((r1 - r0 * r0.dot(&r1)).normalize());
    let r2 = r0.cross(&r1);
    let rotation = Mat3::from_columns(&[r0, r1, r2]);

    let rt = rotation.transpose();
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        let l = rt * (p - mean);
        lo = lo.inf(&l);
        hi = hi.sup(&l);
    }
    let mid = (lo + hi) * 0.5;
    let half = ((hi - lo) * 0.5).map(|h| h.max(EPSILON_DEGENERATE));
    Ok(Obb {
        center: mean + rotation * mid,
        rotation,
        half_lengths: half,
        degenerate: collapsed >= 2,
    })
}
