//! Multi-view part labels from depth maps and externally supplied 2D masks.

mod io;
mod pointmap;

pub use io::{
    load_view_dir, load_views, read_pfm, save_view_dir, write_pfm, CameraFile, MaskScores,
};
pub use pointmap::{match_prompts_pointmap, PointMap, PointMapSet};

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rand::seq::index;

use crate::geom::{PointCloud, RigidTransform, Vec3};
use crate::{seed, Error, Exec, Result};

/// Pinhole intrinsics; pixel `(u, v)` has its center at integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMask {
    pub width: usize,
    pub height: usize,
    /// Row-major, `true` inside the mask.
    pub bitmap: Vec<bool>,
    pub confidence: f64,
    pub stability: f64,
}

impl ScoredMask {
    pub fn new(width: usize, height: usize, bitmap: Vec<bool>, confidence: f64, stability: f64) -> Result<Self> {
        if bitmap.len() != width * height {
            return Err(Error::InvalidValue(format!(
                "mask has {} pixels, expected {}x{}",
                bitmap.len(),
                width,
                height
            )));
        }
        for (name, v) in [("confidence", confidence), ("stability", stability)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidValue(format!("mask {name} {v} outside [0,1]")));
            }
        }
        Ok(ScoredMask {
            width,
            height,
            bitmap,
            confidence,
            stability,
        })
    }

    pub fn score(&self) -> f64 {
        self.confidence * self.stability
    }

    pub fn area(&self) -> usize {
        self.bitmap.iter().filter(|&&b| b).count()
    }

    pub fn iou(&self, other: &ScoredMask) -> f64 {
        let (mut inter, mut union) = (0usize, 0usize);
        for (a, b) in self.bitmap.iter().zip(&other.bitmap) {
            inter += (*a && *b) as usize;
            union += (*a || *b) as usize;
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// One calibrated RGB-D view with its candidate masks.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraView {
    pub intrinsics: Intrinsics,
    pub world_to_cam: RigidTransform,
    /// Row-major z-depth, 0 where invalid.
    pub depth: Vec<f32>,
    pub masks: Vec<ScoredMask>,
}

impl CameraView {
    pub fn new(
        intrinsics: Intrinsics,
        world_to_cam: RigidTransform,
        depth: Vec<f32>,
        masks: Vec<ScoredMask>,
    ) -> Result<Self> {
        let k = &intrinsics;
        if !(k.fx > 0.0 && k.fy > 0.0) {
            return Err(Error::InvalidValue("focal lengths must be positive".into()));
        }
        if depth.len() != k.width * k.height {
            return Err(Error::InvalidValue(format!(
                "depth has {} pixels, expected {}x{}",
                depth.len(),
                k.width,
                k.height
            )));
        }
        if depth.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidValue("depth must be finite and non-negative".into()));
        }
        if let Some(m) = masks.iter().find(|m| m.width != k.width || m.height != k.height) {
            return Err(Error::InvalidValue(format!(
                "mask is {}x{}, view is {}x{}",
                m.width, m.height, k.width, k.height
            )));
        }
        Ok(CameraView {
            intrinsics,
            world_to_cam,
            depth,
            masks,
        })
    }

    pub fn depth_at(&self, u: usize, v: usize) -> f32 {
        self.depth[v * self.intrinsics.width + u]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    /// Camera-frame z.
    pub depth: f64,
    /// Whether `(u, v)` lies in `[0, w) x [0, h)`.
    pub in_frame: bool,
}

impl Projection {
    /// Nearest pixel, if in frame.
    pub fn pixel(&self, k: &Intrinsics) -> Option<(usize, usize)> {
        let (u, v) = (self.u.round(), self.v.round());
        (u >= 0.0 && v >= 0.0 && (u as usize) < k.width && (v as usize) < k.height).then(|| (u as usize, v as usize))
    }
}

pub fn project(p: &Vec3, view: &CameraView) -> Result<Projection> {
    let c = view.world_to_cam.apply_point(p);
    if !(c.z > 1e-9) {
        return Err(Error::BehindCamera);
    }
    let k = &view.intrinsics;
    let u = k.fx * c.x / c.z + k.cx;
    let v = k.fy * c.y / c.z + k.cy;
    let in_frame = u >= 0.0 && v >= 0.0 && u < k.width as f64 && v < k.height as f64;
    Ok(Projection {
        u,
        v,
        depth: c.z,
        in_frame,
    })
}

/// World point seen at pixel `(u, v)` with z-depth `z`.
pub fn unproject(view: &CameraView, u: f64, v: f64, z: f64) -> Vec3 {
    let k = &view.intrinsics;
    let c = Vec3::new((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
    view.world_to_cam.inverse().apply_point(&c)
}

/// Every valid-depth pixel lifted to world coordinates, row-major order.
pub fn backproject(view: &CameraView) -> PointCloud {
    PointCloud::new(backproject_pixels(view).into_iter().map(|(_, p)| p).collect())
}

/// Like [`backproject`], keeping the source pixel index.
pub fn backproject_pixels(view: &CameraView) -> Vec<(usize, Vec3)> {
    let k = &view.intrinsics;
    let inv = view.world_to_cam.inverse();
    view.depth
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 0.0)
        .map(|(idx, &d)| {
            let (u, v) = ((idx % k.width) as f64, (idx / k.width) as f64);
            let z = d as f64;
            let c = Vec3::new((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
            (idx, inv.apply_point(&c))
        })
        .collect()
}

fn rank_order(a: &ScoredMask, b: &ScoredMask) -> Ordering {
    b.score()
        .total_cmp(&a.score())
        .then_with(|| b.area().cmp(&a.area()))
        .then_with(|| a.bitmap.cmp(&b.bitmap))
}

/// Sorts by `confidence * stability` (descending; ties by larger area, then
/// bitmap) and greedily keeps masks whose IoU with every kept mask is at
/// most `iou_threshold`.
pub fn rank_and_nms(masks: &[ScoredMask], iou_threshold: f64) -> Vec<ScoredMask> {
    let mut sorted: Vec<&ScoredMask> = masks.iter().collect();
    sorted.sort_by(|a, b| rank_order(a, b));
    let mut kept: Vec<ScoredMask> = Vec::new();
    for m in sorted {
        if kept.iter().all(|k| k.iou(m) <= iou_threshold) {
            kept.push(m.clone());
        }
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    pub iou_threshold: f64,
    /// Fraction of mutually visible seeds two masks must share to merge.
    pub group_overlap: f64,
    /// Absolute z-depth agreement for a point to count as visible in a view.
    pub depth_tolerance: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            iou_threshold: 0.7,
            group_overlap: 0.5,
            depth_tolerance: 0.01,
        }
    }
}

/// What a view says about a point: `None` if the point is hidden or out of
/// frame, `Some(None)` if visible but unmasked, `Some(Some(m))` inside mask `m`.
type Observation = Option<Option<usize>>;

struct PreparedView<'a> {
    view: &'a CameraView,
    masks: Vec<ScoredMask>,
    /// Best-ranked kept mask covering each pixel.
    owner: Vec<Option<usize>>,
}

impl PreparedView<'_> {
    fn observe(&self, p: &Vec3, tol: f64) -> Observation {
        let proj = project(p, self.view).ok()?;
        let (u, v) = proj.pixel(&self.view.intrinsics)?;
        let d = self.view.depth_at(u, v) as f64;
        if d > 0.0 && (proj.depth - d).abs() <= tol {
            Some(self.owner[v * self.view.intrinsics.width + u])
        } else {
            None
        }
    }
}

/// Labeled cloud from all views. See [`fuse_labels_with`].
pub fn fuse_labels(views: &[CameraView], n_seeds: usize, seed: u64) -> Result<PointCloud> {
    fuse_labels_with(Exec::default(), views, n_seeds, seed, &FusionParams::default())
}

/// Backprojects every view, then:
/// 1. per view, masks go through [`rank_and_nms`] and each pixel belongs to
///    the best-ranked kept mask covering it;
/// 2. `n_seeds` sampled points are observed in every view; masks from two
///    views are grouped when the seeds in both masks make up at least
///    `group_overlap` of the smaller mask's mutually visible seeds (greedy,
///    strongest pairs first, never two masks of one view in a group);
/// 3. each point takes the group with the largest confidence-weighted vote
///    over the views that see it.
///
/// Labels are renumbered by decreasing point count (ties: smallest point).
/// Points without any vote get `-1`.
pub fn fuse_labels_with(
    exec: Exec,
    views: &[CameraView],
    n_seeds: usize,
    seed: u64,
    params: &FusionParams,
) -> Result<PointCloud> {
    let prepared: Vec<PreparedView> = views
        .iter()
        .map(|view| {
            let masks = rank_and_nms(&view.masks, params.iou_threshold);
            let mut owner = vec![None; view.depth.len()];
            for (mi, m) in masks.iter().enumerate().rev() {
                for (px, &b) in m.bitmap.iter().enumerate() {
                    if b {
                        owner[px] = Some(mi);
                    }
                }
            }
            PreparedView { view, masks, owner }
        })
        .collect();

    let points: Vec<Vec3> = views
        .iter()
        .flat_map(|v| backproject_pixels(v).into_iter().map(|(_, p)| p))
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyInput("no valid depth in any view"));
    }
    let tol = params.depth_tolerance;
    let observations: Vec<Vec<Observation>> =
        exec.map_slice(&points, |p| prepared.iter().map(|pv| pv.observe(p, tol)).collect());

    // mask grouping from seed points
    let mut rng = seed::rng(seed::derive(seed, "fusion-seeds"));
    let seeds: Vec<usize> = if n_seeds >= points.len() {
        (0..points.len()).collect()
    } else {
        let mut s = index::sample(&mut rng, points.len(), n_seeds).into_vec();
        s.sort_unstable();
        s
    };
    let mask_ids: Vec<(usize, usize)> = prepared
        .iter()
        .enumerate()
        .flat_map(|(v, pv)| (0..pv.masks.len()).map(move |m| (v, m)))
        .collect();
    let id_of: HashMap<(usize, usize), usize> = mask_ids.iter().enumerate().map(|(i, &k)| (k, i)).collect();

    let mut pairs = Vec::new();
    for a in 0..views.len() {
        for b in a + 1..views.len() {
            // per mask: seeds in it among those both views see; per pair: shared
            let mut in_a: BTreeMap<usize, usize> = BTreeMap::new();
            let mut in_b: BTreeMap<usize, usize> = BTreeMap::new();
            let mut shared: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for &s in &seeds {
                let (Some(oa), Some(ob)) = (observations[s][a], observations[s][b]) else {
                    continue;
                };
                if let Some(ma) = oa {
                    *in_a.entry(ma).or_default() += 1;
                }
                if let Some(mb) = ob {
                    *in_b.entry(mb).or_default() += 1;
                }
                if let (Some(ma), Some(mb)) = (oa, ob) {
                    *shared.entry((ma, mb)).or_default() += 1;
                }
            }
            for ((ma, mb), n) in shared {
                let denom = in_a[&ma].min(in_b[&mb]);
                let ratio = n as f64 / denom as f64;
                if ratio >= params.group_overlap {
                    pairs.push((ratio, n, id_of[&(a, ma)], id_of[&(b, mb)]));
                }
            }
        }
    }
    pairs.sort_by(|x, y| {
        y.0.total_cmp(&x.0)
            .then(y.1.cmp(&x.1))
            .then((x.2, x.3).cmp(&(y.2, y.3)))
    });
    let mut groups = Groups::new(&mask_ids);
    for (_, _, i, j) in pairs {
        groups.try_union(i, j);
    }

    // confidence-weighted vote
    let group_of: Vec<usize> = (0..mask_ids.len()).map(|i| groups.find(i)).collect();
    let votes: Vec<Option<usize>> = exec.map_slice(&observations, |obs| {
        let mut tally: BTreeMap<usize, f64> = BTreeMap::new();
        for (v, o) in obs.iter().enumerate() {
            if let Some(Some(m)) = o {
                let g = group_of[id_of[&(v, *m)]];
                *tally.entry(g).or_default() += prepared[v].masks[*m].confidence;
            }
        }
        tally
            .into_iter()
            .fold(None, |best: Option<(usize, f64)>, (g, w)| match best {
                Some((_, bw)) if bw >= w => best,
                _ => Some((g, w)),
            })
            .map(|(g, _)| g)
    });

    let labels = canonical_labels(&points, &votes);
    PointCloud::with_labels(points, labels)
}

/// Union-find over masks that refuses to put two masks of one view together.
struct Groups {
    parent: Vec<usize>,
    views: Vec<Vec<usize>>,
}

impl Groups {
    fn new(ids: &[(usize, usize)]) -> Self {
        Groups {
            parent: (0..ids.len()).collect(),
            views: ids.iter().map(|&(v, _)| vec![v]).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn try_union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb || self.views[ra].iter().any(|v| self.views[rb].contains(v)) {
            return;
        }
        let (keep, drop) = (ra.min(rb), ra.max(rb));
        self.parent[drop] = keep;
        let moved = std::mem::take(&mut self.views[drop]);
        self.views[keep].extend(moved);
    }
}

fn lex_cmp(a: &Vec3, b: &Vec3) -> Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

/// Dense labels ordered by group size (descending), then by smallest point.
fn canonical_labels(points: &[Vec3], groups: &[Option<usize>]) -> Vec<i32> {
    let mut stats: HashMap<usize, (usize, Vec3)> = HashMap::new();
    for (p, g) in points.iter().zip(groups) {
        if let Some(g) = g {
            let e = stats.entry(*g).or_insert((0, *p));
            e.0 += 1;
            if lex_cmp(p, &e.1) == Ordering::Less {
                e.1 = *p;
            }
        }
    }
    let mut order: Vec<(usize, usize, Vec3)> = stats.into_iter().map(|(g, (n, p))| (g, n, p)).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| lex_cmp(&a.2, &b.2)));
    let label: HashMap<usize, i32> = order.iter().enumerate().map(|(i, e)| (e.0, i as i32)).collect();
    groups.iter().map(|g| g.map_or(-1, |g| label[&g])).collect()
}
