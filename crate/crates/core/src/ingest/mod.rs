//! URDF ingestion, joint-state posing and fine-tuning dataset generation.

mod bundle;
mod dataset;
mod urdf;

pub use bundle::{bundle_dirs, urdf_dirs, ObjectBundle, BUNDLE_FORMAT, BUNDLE_VERSION, URDF_FILE};
pub use dataset::{
    augment, encode_sample, make_dataset, make_dataset_with, Dataset, DatasetConfig, DatasetSample,
    Diagnostic, SampleMeta,
};
pub use urdf::{
    group_part_meshes, parse_urdf, urdf_to_object, MeshRef, UrdfJoint, UrdfJointKind, UrdfLink, UrdfModel,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::articulation::{ArticulatedObject, JointType};
use crate::geom::fit_obb_points;
use crate::{seed, Error, Result};

/// Revolute range used when the source has no limits.
pub const DEFAULT_REVOLUTE_RANGE: (f64, f64) = (0.0, std::f64::consts::FRAC_PI_2);
/// Prismatic travel without limits, as a fraction of the child box depth
/// along the slide axis.
pub const DEFAULT_PRISMATIC_DEPTH_FRACTION: f64 = 0.4;

/// Where inside its range each joint state is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSampler {
    pub open_fraction: (f64, f64),
}

impl Default for StateSampler {
    fn default() -> Self {
        StateSampler {
            open_fraction: (0.25, 0.75),
        }
    }
}

impl StateSampler {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.open_fraction;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(Error::InvalidValue(format!("open fraction ({a}, {b}) is not inside [0, 1]")));
        }
        Ok(())
    }
}

/// The range a joint is sampled from: its limits, or the defaults.
pub fn joint_range(obj: &ArticulatedObject, joint: usize, limits: Option<(f64, f64)>) -> (f64, f64) {
    if let Some(r) = limits {
        return r;
    }
    let j = &obj.joints[joint];
    match j.joint_type {
        JointType::Revolute => DEFAULT_REVOLUTE_RANGE,
        JointType::Prismatic => {
            let obb = &obj.parts[j.child].obb;
            let depth: f64 = (0..3)
                .map(|i| 2.0 * j.axis.dot(&obb.axis(i)).abs() * obb.half_lengths[i])
                .sum();
            (0.0, DEFAULT_PRISMATIC_DEPTH_FRACTION * depth)
        }
    }
}

pub fn sample_states(
    obj: &ArticulatedObject,
    ranges: &[Option<(f64, f64)>],
    sampler: &StateSampler,
    seed: u64,
) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    let (fa, fb) = sampler.open_fraction;
    (0..obj.joints.len())
        .map(|i| {
            let (lo, hi) = joint_range(obj, i, ranges.get(i).copied().flatten());
            lo + rng.gen_range(fa..=fb) * (hi - lo)
        })
        .collect()
}

/// The object at `states` with every part's box refit to its posed mesh
/// (parts without a mesh keep their rigidly moved box).
pub fn pose_at(obj: &ArticulatedObject, states: &[f64]) -> Result<ArticulatedObject> {
    let mut posed = obj.posed(states)?;
    for p in &mut posed.parts {
        if let Some(m) = &p.mesh {
            p.obb = fit_obb_points(&m.vertices)?;
        }
    }
    Ok(posed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosedObject {
    pub object: ArticulatedObject,
    pub states: Vec<f64>,
}

/// Partially opens every joint: states drawn by `sampler` from each range.
pub fn pose_object(
    obj: &ArticulatedObject,
    ranges: &[Option<(f64, f64)>],
    sampler: &StateSampler,
    seed: u64,
) -> Result<PosedObject> {
    sampler.validate()?;
    let states = sample_states(obj, ranges, sampler, seed);
    Ok(PosedObject {
        object: pose_at(obj, &states)?,
        states,
    })
}
