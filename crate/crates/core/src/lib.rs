//! Toolkit for reconstructing articulated objects as code.
//!
//! Parts are summarized by oriented bounding boxes; joints are expressed
//! relative to the child part's box (an axis column plus, for revolute
//! joints, a box edge) and serialized in a small line-oriented DSL that a
//! text predictor can emit. The crate covers:
//!
//! - [`geom`]: point clouds, meshes, rigid transforms, OBB fitting, surface
//!   sampling and Chamfer distance.
//! - [`articulation`]: joints, the OBB-relative encoding and forward kinematics.
//! - [`artcode`]: the articulation DSL (prompt/joint emitters, tolerant parser,
//!   executor, MJCF export).
//! - [`ingest`]: URDF subset parsing, part grouping, posing and dataset generation.
//! - [`shape`]: occupancy grids, label generation, marching cubes and completers.
//! - [`fusion`]: pinhole cameras, mask NMS and multi-view label fusion.
//! - [`eval`]: joint metrics, part matching and report tables.
//! - [`synth`]: procedural cuboid objects and a depth/mask renderer for fixtures.
//!
//! Data-parallel loops go through [`exec::Exec`]; with the `parallel` feature
//! disabled every loop runs sequentially and produces identical output.

pub mod artcode;
pub mod articulation;
mod error;
pub mod eval;
pub mod exec;
pub mod fusion;
pub mod geom;
pub mod ingest;
pub mod seed;
pub mod shape;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Exec;
