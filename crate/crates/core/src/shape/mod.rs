//! Occupancy grids: labels from meshes, normalization frames, training
//! queries, surface extraction and pluggable completion.

mod complete;
mod mc;
mod occupancy;

pub use complete::{complete, CompletionRequest, Completer, ExternalCompleter, IdentityCompleter, REQUEST_POINTS};
pub use mc::{marching_cubes, marching_cubes_with};
pub use occupancy::{occupancy_from_mesh, occupancy_from_mesh_with, winding_number};

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::geom::{fit_obb, Mat3, Obb, PointCloud, RigidTransform, Vec3};
use crate::{seed, Error, Result};

pub const DEFAULT_RESOLUTION: usize = 96;
pub const DEFAULT_PADDING: f64 = 1.2;
pub const MIN_RESOLUTION: usize = 8;
const MAGIC: &[u8; 4] = b"AOG1";

/// Affine map from grid coordinates `[0,1]^3` to world:
/// `world = origin + linear * g`. The columns of `linear` are the world
/// extents of the three grid axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridFrame {
    pub linear: Mat3,
    pub origin: Vec3,
}

impl GridFrame {
    pub fn unit() -> Self {
        GridFrame {
            linear: Mat3::identity(),
            origin: Vec3::zeros(),
        }
    }

    /// Axis-aligned box `[min, max]`.
    pub fn aabb(min: Vec3, max: Vec3) -> Self {
        GridFrame {
            linear: Mat3::from_diagonal(&(max - min)),
            origin: min,
        }
    }

    /// The box inflated by `padding`, mapped onto the unit cube.
    pub fn from_obb(obb: &Obb, padding: f64) -> Self {
        let extents = obb.half_lengths * (2.0 * padding);
        let linear = obb.rotation * Mat3::from_diagonal(&extents);
        GridFrame {
            linear,
            origin: obb.center - linear * Vec3::repeat(0.5),
        }
    }

    pub fn to_world(&self, g: &Vec3) -> Vec3 {
        self.origin + self.linear * g
    }

    pub fn to_grid(&self, p: &Vec3) -> Vec3 {
        let inv = self.linear.try_inverse().unwrap_or_else(Mat3::zeros);
        inv * (p - self.origin)
    }

    /// World lengths of the three grid axes.
    pub fn extents(&self) -> Vec3 {
        Vec3::new(
            self.linear.column(0).norm(),
            self.linear.column(1).norm(),
            self.linear.column(2).norm(),
        )
    }

    /// Rigid part of the map (grid center to world), for orthogonal frames.
    pub fn rigid(&self) -> RigidTransform {
        let e = self.extents();
        let rotation = self.linear * Mat3::from_diagonal(&e.map(|x| 1.0 / x));
        RigidTransform::new(rotation, self.to_world(&Vec3::repeat(0.5)))
    }

    fn validate(&self) -> Result<()> {
        let det = self.linear.determinant();
        if !(det.abs() > 1e-300) || self.origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidValue("grid frame is singular".into()));
        }
        Ok(())
    }
}

/// Resolution and placement of a grid; cell `(i, j, k)` has its sample at
/// the cell center `((i + 0.5) / nx, ...)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: [usize; 3],
    pub frame: GridFrame,
}

impl GridSpec {
    pub fn new(resolution: [usize; 3], frame: GridFrame) -> Result<Self> {
        if resolution.iter().any(|&r| r < MIN_RESOLUTION) {
            return Err(Error::InvalidValue(format!(
                "grid resolution {resolution:?} below {MIN_RESOLUTION}"
            )));
        }
        frame.validate()?;
        Ok(GridSpec { resolution, frame })
    }

    pub fn cubic(n: usize, frame: GridFrame) -> Result<Self> {
        Self::new([n; 3], frame)
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index, x fastest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.resolution;
        (k * ny + j) * nx + i
    }

    pub fn cell(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.resolution;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn cell_center_grid(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let [nx, ny, nz] = self.resolution;
        Vec3::new(
            (i as f64 + 0.5) / nx as f64,
            (j as f64 + 0.5) / ny as f64,
            (k as f64 + 0.5) / nz as f64,
        )
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.frame.to_world(&self.cell_center_grid(i, j, k))
    }

    /// Cell containing grid point `g`, if inside `[0,1)^3`.
    pub fn locate(&self, g: &Vec3) -> Option<[usize; 3]> {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let x = g[a] * self.resolution[a] as f64;
            if !(x >= 0.0) || x >= self.resolution[a] as f64 {
                return None;
            }
            out[a] = x as usize;
        }
        Some(out)
    }

    /// World length of one cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        let r = &self.resolution;
        (self.frame.linear * Vec3::new(1.0 / r[0] as f64, 1.0 / r[1] as f64, 1.0 / r[2] as f64)).norm()
    }
}

/// Scalar field in `[0,1]` sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub spec: GridSpec,
    pub values: Vec<f32>,
}

impl OccupancyGrid {
    pub fn new(spec: GridSpec, values: Vec<f32>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidValue(format!(
                "grid holds {} values, resolution needs {}",
                values.len(),
                spec.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!("grid value {v} outside [0,1]")));
        }
        Ok(OccupancyGrid { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        OccupancyGrid {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    /// Grid whose values come from `f` at each cell center (world coordinates).
    pub fn from_fn(spec: GridSpec, f: impl Fn(&Vec3) -> f32) -> Result<Self> {
        let values = (0..spec.len())
            .map(|idx| {
                let [i, j, k] = spec.cell(idx);
                f(&spec.cell_center(i, j, k))
            })
            .collect();
        Self::new(spec, values)
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.spec.resolution
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.values[self.spec.index(i, j, k)]
    }

    pub fn occupied(&self, idx: usize) -> bool {
        self.values[idx] >= 0.5
    }

    pub fn occupied_count(&self) -> usize {
        (0..self.values.len()).filter(|&i| self.occupied(i)).count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 12 + 96 + 4 * self.values.len());
        out.extend_from_slice(MAGIC);
        for r in self.spec.resolution {
            out.extend_from_slice(&(r as u32).to_le_bytes());
        }
        let f = &self.spec.frame;
        for r in 0..3 {
            for c in 0..3 {
                out.extend_from_slice(&f.linear[(r, c)].to_le_bytes());
            }
            out.extend_from_slice(&f.origin[r].to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::ExternalFormat(m.to_string());
        if bytes.len() < 16 + 96 || &bytes[..4] != MAGIC {
            return Err(bad("missing AOG1 header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let resolution = [u32_at(4), u32_at(8), u32_at(12)];
        let mut linear = Mat3::zeros();
        let mut origin = Vec3::zeros();
        for r in 0..3 {
            for c in 0..3 {
                linear[(r, c)] = f64_at(16 + 8 * (4 * r + c));
            }
            origin[r] = f64_at(16 + 8 * (4 * r + 3));
        }
        let n = resolution
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .ok_or_else(|| bad("resolution overflows"))?;
        let body = &bytes[112..];
        if body.len() != n * 4 {
            return Err(bad(&format!("expected {} value bytes, found {}", n * 4, body.len())));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let spec = GridSpec::new(resolution, GridFrame { linear, origin })
            .map_err(|e| bad(&e.to_string()))?;
        OccupancyGrid::new(spec, values).map_err(|e| bad(&e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Frame of the partial cloud's fitted box, inflated by `padding`.
pub fn normalize_frame(partial: &PointCloud, padding: f64) -> Result<GridFrame> {
    if !(padding > 0.0) {
        return Err(Error::InvalidValue(format!("padding {padding} must be positive")));
    }
    let obb = fit_obb(partial)?;
    Ok(GridFrame::from_obb(&obb, padding))
}

/// One training query in grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query {
    pub point: Vec3,
    pub occupied: bool,
}

/// `n` labeled queries, exactly `floor(occupied_fraction * n)` of them drawn
/// inside occupied cells and displaced by Gaussian noise of standard
/// deviation `surface_jitter` (grid units). The label is read from the cell
/// that contains the displaced point; points leaving the grid are free.
pub fn sample_training_queries(
    grid: &OccupancyGrid,
    n: usize,
    occupied_fraction: f64,
    surface_jitter: f64,
    seed: u64,
) -> Result<Vec<Query>> {
    if !(0.0..=1.0).contains(&occupied_fraction) {
        return Err(Error::InvalidValue(format!("occupied fraction {occupied_fraction}")));
    }
    let n_occ = (occupied_fraction * n as f64).floor() as usize;
    let n_free = n - n_occ;
    let (occ, free): (Vec<usize>, Vec<usize>) =
        (0..grid.values.len()).partition(|&i| grid.occupied(i));
    if n_occ > 0 && occ.is_empty() {
        return Err(Error::EmptyInput("grid has no occupied cells"));
    }
    if n_free > 0 && free.is_empty() {
        return Err(Error::EmptyInput("grid has no free cells"));
    }
    let jitter = Normal::new(0.0, surface_jitter.max(0.0))
        .map_err(|e| Error::InvalidValue(e.to_string()))?;
    let spec = &grid.spec;
    let mut rng = seed::rng(seed::derive(seed, "training-queries"));
    let in_cell = |rng: &mut rand_chacha::ChaCha8Rng, cells: &[usize]| {
        let [i, j, k] = spec.cell(cells[rng.gen_range(0..cells.len())]);
        let r = spec.resolution;
        Vec3::new(
            (i as f64 + rng.gen::<f64>()) / r[0] as f64,
            (j as f64 + rng.gen::<f64>()) / r[1] as f64,
            (k as f64 + rng.gen::<f64>()) / r[2] as f64,
        )
    };
    let mut out = Vec::with_capacity(n);
    for _ in 0..n_occ {
        let p = in_cell(&mut rng, &occ);
        let p = p + Vec3::new(jitter.sample(&mut rng), jitter.sample(&mut rng), jitter.sample(&mut rng));
        let occupied = spec
            .locate(&p)
            .is_some_and(|[i, j, k]| grid.occupied(spec.index(i, j, k)));
        out.push(Query { point: p, occupied });
    }
    for _ in 0..n_free {
        out.push(Query {
            point: in_cell(&mut rng, &free),
            occupied: false,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotz;

    fn cube_cloud() -> PointCloud {
        // regular lattice on the six faces
        let mut pts = Vec::new();
        for a in 0..3 {
            for side in [-0.5, 0.5] {
                for u in 0..=10 {
                    for v in 0..=10 {
                        let mut p = Vec3::zeros();
                        p[a] = side;
                        p[(a + 1) % 3] = -0.5 + 0.1 * u as f64;
                        p[(a + 2) % 3] = -0.5 + 0.1 * v as f64;
                        pts.push(p);
                    }
                }
            }
        }
        PointCloud::new(pts)
    }

    #[test]
    fn normalize_unit_cube() {
        let f = normalize_frame(&cube_cloud(), 1.2).unwrap();
        let lo = f.to_grid(&Vec3::repeat(-0.6));
        let hi = f.to_grid(&Vec3::repeat(0.6));
        for a in 0..3 {
            let (l, h) = (lo[a].min(hi[a]), lo[a].max(hi[a]));
            assert!(l.abs() < 1e-9 && (h - 1.0).abs() < 1e-9);
        }
        let f1 = normalize_frame(&cube_cloud(), 1.0).unwrap();
        for p in &cube_cloud().points {
            let g = f1.to_grid(p);
            assert!(g.iter().all(|x| (-1e-9..=1.0 + 1e-9).contains(x)));
        }
    }

    #[test]
    fn normalize_scale_equivariant() {
        let mut pc = cube_cloud();
        for p in &mut pc.points {
            *p = rotz(0.3) * Vec3::new(p.x * 1.7, p.y * 0.9, p.z * 0.4) + Vec3::new(0.2, -1.0, 3.0);
        }
        let f = normalize_frame(&pc, 1.2).unwrap();
        for s in [0.5, 2.0, 8.0] {
            let scaled = PointCloud::new(pc.points.iter().map(|p| p * s).collect());
            let g = normalize_frame(&scaled, 1.2).unwrap();
            assert_eq!(g.extents(), f.extents() * s);
        }
    }

    #[test]
    fn half_open_drawer_depth_covered() {
        // front face of a 0.4 x 0.3 x 0.6 drawer observed at x = 0.2, depth 0.6 unseen
        let mut pts = Vec::new();
        for a in 0..=30 {
            for b in 0..=20 {
                pts.push(Vec3::new(0.2 + 0.01 * ((a * 7 + b * 3) % 5) as f64 / 5.0, -0.15 + 0.015 * b as f64, -0.3 + 0.02 * a as f64));
            }
        }
        let pc = PointCloud::new(pts);
        let obb = fit_obb(&pc).unwrap();
        let padding = 0.6 / obb.half_lengths.min() * 1.01;
        let frame = normalize_frame(&pc, padding).unwrap();
        // unobserved back panel of the drawer lies inside the normalized box
        let g = frame.to_grid(&Vec3::new(0.2 - 0.6, 0.0, 0.0));
        assert!(g.iter().all(|x| (0.0..=1.0).contains(x)), "{g:?}");
    }

    #[test]
    fn grid_file_round_trip() {
        let spec = GridSpec::new([8, 9, 10], GridFrame::from_obb(
            &Obb::new(Vec3::new(0.1, 0.2, 0.3), rotz(0.7), Vec3::new(0.3, 0.2, 0.1)).unwrap(), 1.2)).unwrap();
        let grid = OccupancyGrid::from_fn(spec, |p| ((p.x * 13.0).sin().abs()) as f32).unwrap();
        let bytes = grid.to_bytes();
        assert_eq!(&bytes[..4], b"AOG1");
        let back = OccupancyGrid::from_bytes(&bytes).unwrap();
        assert_eq!(back, grid);
        assert_eq!(back.to_bytes(), bytes);
        assert!(matches!(OccupancyGrid::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::ExternalFormat(_))));
    }

    #[test]
    fn query_counts_and_determinism() {
        let spec = GridSpec::cubic(16, GridFrame::unit()).unwrap();
        let grid = OccupancyGrid::from_fn(spec, |p| ((p - Vec3::repeat(0.5)).norm() < 0.3) as u8 as f32).unwrap();
        let q = sample_training_queries(&grid, 12000, 0.25, 0.01, 9).unwrap();
        assert_eq!(q.len(), 12000);
        let sourced_occ = q[..3000].iter().filter(|q| q.occupied).count();
        assert!(sourced_occ > 2500);
        assert!(q[3000..].iter().all(|q| !q.occupied));
        assert_eq!(q, sample_training_queries(&grid, 12000, 0.25, 0.01, 9).unwrap());

        let empty = OccupancyGrid::zeros(spec);
        assert_eq!(sample_training_queries(&empty, 100, 0.0, 0.01, 1).unwrap().len(), 100);
        assert!(matches!(sample_training_queries(&empty, 100, 0.25, 0.01, 1), Err(Error::EmptyInput(_))));
    }
}
