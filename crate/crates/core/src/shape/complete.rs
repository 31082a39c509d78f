use std::path::PathBuf;

use rand::seq::index;
use rand::Rng;

use super::{GridFrame, GridSpec, OccupancyGrid};
use crate::geom::{fit_obb, Obb, PointCloud, Vec3};
use crate::{seed, Error, Result};

/// Points per completion request.
pub const REQUEST_POINTS: usize = 2048;

/// Input to a completer: a fixed-size partial cloud in grid coordinates plus
/// the grid it must fill.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub points: Vec<Vec3>,
    pub partial_obb: Obb,
    pub spec: GridSpec,
}

impl CompletionRequest {
    /// Fits the partial box, builds the padded frame and resamples the cloud
    /// to [`REQUEST_POINTS`] (subsampling without replacement, or padding by
    /// drawing with replacement).
    pub fn new(partial: &PointCloud, padding: f64, resolution: usize, seed: u64) -> Result<Self> {
        let partial_obb = fit_obb(partial)?;
        let spec = GridSpec::cubic(resolution, GridFrame::from_obb(&partial_obb, padding))?;
        let mut rng = seed::rng(seed::derive(seed, "completion-resample"));
        let n = partial.len();
        let picked: Vec<usize> = if n >= REQUEST_POINTS {
            let mut idx = index::sample(&mut rng, n, REQUEST_POINTS).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..n).chain((n..REQUEST_POINTS).map(|_| rng.gen_range(0..n))).collect()
        };
        let points = picked
            .into_iter()
            .map(|i| spec.frame.to_grid(&partial.points[i]))
            .collect();
        Ok(CompletionRequest {
            points,
            partial_obb,
            spec,
        })
    }
}

pub trait Completer: Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<OccupancyGrid>;
}

pub fn complete(request: &CompletionRequest, completer: &dyn Completer) -> Result<OccupancyGrid> {
    completer.complete(request)
}

/// Voxelizes the input: every cell within `dilation` cells of a point is
/// occupied, then enclosed free space is filled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCompleter {
    pub dilation: f64,
    pub fill_interior: bool,
}

impl Default for IdentityCompleter {
    fn default() -> Self {
        IdentityCompleter {
            dilation: 1.5,
            fill_interior: true,
        }
    }
}

impl Completer for IdentityCompleter {
    fn complete(&self, req: &CompletionRequest) -> Result<OccupancyGrid> {
        let spec = req.spec;
        let res = spec.resolution;
        let mut occ = vec![false; spec.len()];
        let reach = self.dilation.max(0.0);
        let r2 = reach * reach;
        for g in &req.points {
            let x: [f64; 3] = std::array::from_fn(|a| g[a] * res[a] as f64 - 0.5);
            let lo: [usize; 3] = std::array::from_fn(|a| (x[a] - reach).ceil().max(0.0) as usize);
            let hi: [i64; 3] = std::array::from_fn(|a| ((x[a] + reach).floor() as i64).min(res[a] as i64 - 1));
            for k in lo[2] as i64..=hi[2] {
                for j in lo[1] as i64..=hi[1] {
                    for i in lo[0] as i64..=hi[0] {
                        let d2 = (i as f64 - x[0]).powi(2) + (j as f64 - x[1]).powi(2) + (k as f64 - x[2]).powi(2);
                        if d2 <= r2 {
                            occ[spec.index(i as usize, j as usize, k as usize)] = true;
                        }
                    }
                }
            }
        }
        if self.fill_interior {
            fill_enclosed(&spec, &mut occ);
        }
        OccupancyGrid::new(spec, occ.into_iter().map(|o| o as u8 as f32).collect())
    }
}

/// Marks free cells not 6-connected to the grid boundary as occupied.
fn fill_enclosed(spec: &GridSpec, occ: &mut [bool]) {
    let [nx, ny, nz] = spec.resolution;
    let stride = [1, nx, nx * ny];
    let mut outside = vec![false; occ.len()];
    let mut stack = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let border = i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
                let idx = spec.index(i, j, k);
                if border && !occ[idx] {
                    outside[idx] = true;
                    stack.push(idx);
                }
            }
        }
    }
    while let Some(idx) = stack.pop() {
        let c = spec.cell(idx);
        for a in 0..3 {
            let n = spec.resolution[a];
            let mut visit = |ni: usize| {
                if !occ[ni] && !outside[ni] {
                    outside[ni] = true;
                    stack.push(ni);
                }
            };
            if c[a] > 0 {
                visit(idx - stride[a]);
            }
            if c[a] + 1 < n {
                visit(idx + stride[a]);
            }
        }
    }
    for (o, out) in occ.iter_mut().zip(outside) {
        *o = !out;
    }
}

/// Reads a grid written by an outside model. Values and resolution come
/// from the file; they are interpreted in the request's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalCompleter {
    pub path: PathBuf,
}

impl Completer for ExternalCompleter {
    fn complete(&self, req: &CompletionRequest) -> Result<OccupancyGrid> {
        let bytes = std::fs::read(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let grid = OccupancyGrid::from_bytes(&bytes)?;
        let spec = GridSpec::new(grid.spec.resolution, req.spec.frame)?;
        OccupancyGrid::new(spec, grid.values)
    }
}
