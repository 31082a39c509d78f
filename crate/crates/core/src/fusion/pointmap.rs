use std::path::Path;

use crate::geom::{KdTree, Vec3};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"APM1";

/// Dense per-pixel 3D points for one view, globally aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub points: Vec<Vec3>,
    pub valid: Vec<bool>,
}

impl PointMap {
    pub fn new(width: usize, height: usize, points: Vec<Vec3>, valid: Vec<bool>) -> Result<Self> {
        if points.len() != width * height || valid.len() != width * height {
            return Err(Error::InvalidValue("point map size does not match its dimensions".into()));
        }
        if points.iter().zip(&valid).any(|(p, v)| *v && p.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidValue("valid point-map entries must be finite".into()));
        }
        Ok(PointMap { width, height, points, valid })
    }

    /// `APM1`, u32 width, u32 height, `w*h*3` f32 (x, y, z per pixel), then
    /// one validity byte per pixel. Little-endian throughout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.points.len() * 13);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for p in &self.points {
            for c in p.iter() {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        out.extend(self.valid.iter().map(|&v| v as u8));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::InvalidValue(format!("point map: {m}"));
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("missing APM1 header"));
        }
        let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let n = w * h;
        if bytes.len() != 12 + n * 13 {
            return Err(bad("size does not match header"));
        }
        let f = |i: usize| f32::from_le_bytes(bytes[12 + 4 * i..16 + 4 * i].try_into().unwrap()) as f64;
        let points = (0..n).map(|i| Vec3::new(f(3 * i), f(3 * i + 1), f(3 * i + 2))).collect();
        let valid = bytes[12 + 12 * n..].iter().map(|&b| b != 0).collect();
        PointMap::new(w, h, points, valid)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointMapSet {
    pub maps: Vec<PointMap>,
}

/// For each prompt pixel `(u, v)` on view 0, the pixel in every view whose
/// point is nearest to the prompt's 3D point, or `None` when that distance
/// exceeds `dist_threshold`. View 0 always matches itself.
pub fn match_prompts_pointmap(
    maps: &PointMapSet,
    prompts: &[(usize, usize)],
    dist_threshold: f64,
) -> Result<Vec<Vec<Option<(usize, usize)>>>> {
    let first = maps.maps.first().ok_or(Error::EmptyInput("no point maps"))?;
    let indexed: Vec<(Vec<usize>, KdTree)> = maps
        .maps
        .iter()
        .map(|m| {
            let idx: Vec<usize> = (0..m.points.len()).filter(|&i| m.valid[i]).collect();
            let pts: Vec<Vec3> = idx.iter().map(|&i| m.points[i]).collect();
            (idx, KdTree::new(&pts))
        })
        .collect();
    prompts
        .iter()
        .map(|&(u, v)| {
            if u >= first.width || v >= first.height || !first.valid[v * first.width + u] {
                return Err(Error::InvalidPrompt(u, v));
            }
            let q = first.points[v * first.width + u];
            Ok(maps
                .maps
                .iter()
                .zip(&indexed)
                .enumerate()
                .map(|(vi, (m, (idx, tree)))| {
                    if vi == 0 {
                        return Some((u, v));
                    }
                    let (i, d2) = tree.nearest(&q)?;
                    (d2.sqrt() <= dist_threshold).then(|| (idx[i] % m.width, idx[i] / m.width))
                })
                .collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_map(z_of: impl Fn(usize, usize) -> Option<f64>) -> PointMap {
        let (w, h) = (10, 8);
        let mut points = Vec::new();
        let mut valid = Vec::new();
        for v in 0..h {
            for u in 0..w {
                let z = z_of(u, v);
                points.push(Vec3::new(u as f64 * 0.1, v as f64 * 0.1, z.unwrap_or(0.0)));
                valid.push(z.is_some());
            }
        }
        PointMap::new(w, h, points, valid).unwrap()
    }

    #[test]
    fn duplicate_view_matches_itself() {
        let m = plane_map(|_, _| Some(1.0));
        let set = PointMapSet { maps: vec![m.clone(), m] };
        let out = match_prompts_pointmap(&set, &[(3, 4), (9, 0)], 0.0).unwrap();
        assert_eq!(out, vec![vec![Some((3, 4)), Some((3, 4))], vec![Some((9, 0)), Some((9, 0))]]);
    }

    #[test]
    fn occluded_prompt_unmatched() {
        let a = plane_map(|_, _| Some(1.0));
        // view 2 only sees the left half, the right half is hidden
        let b = plane_map(|u, _| (u < 5).then_some(1.0));
        let set = PointMapSet { maps: vec![a.clone(), a, b] };
        let out = match_prompts_pointmap(&set, &[(8, 2), (2, 2)], 0.02).unwrap();
        // brute force: nearest visible point to (0.8, 0.2) is (0.4, 0.2), 0.4 away
        assert_eq!(out[0][2], None);
        assert_eq!(out[1][2], Some((2, 2)));
        let all = match_prompts_pointmap(&set, &[(8, 2)], f64::INFINITY).unwrap();
        assert_eq!(all[0][2], Some((4, 2)));
    }

    #[test]
    fn invalid_prompt() {
        let a = plane_map(|u, _| (u > 0).then_some(1.0));
        let set = PointMapSet { maps: vec![a] };
        assert!(matches!(match_prompts_pointmap(&set, &[(0, 0)], 1.0), Err(Error::InvalidPrompt(0, 0))));
    }

    #[test]
    fn bytes_round_trip() {
        let m = plane_map(|u, v| ((u + v) % 3 != 0).then_some(0.5));
        let bytes = m.to_bytes();
        let back = PointMap::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.valid, m.valid);
        assert!(back.points.iter().zip(&m.points).all(|(a, b)| (a - b).norm() < 1e-7));
    }
}
