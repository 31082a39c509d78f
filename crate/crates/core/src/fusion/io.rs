//! View directories: `view_XX/{camera.json, depth.pfm, mask_YY.png, mask_YY.json}`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CameraView, Intrinsics, ScoredMask};
use crate::geom::{Mat3, RigidTransform, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFile {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major 4x4.
    pub world_to_cam: Vec<f64>,
}

impl CameraFile {
    pub fn from_view(view: &CameraView) -> Self {
        let k = &view.intrinsics;
        let t = &view.world_to_cam;
        let mut m = Vec::with_capacity(16);
        for r in 0..3 {
            for c in 0..3 {
                m.push(t.rotation[(r, c)]);
            }
            m.push(t.translation[r]);
        }
        m.extend_from_slice(&[0.0, 0.0, 0.0, 1.0]);
        CameraFile {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
            world_to_cam: m,
        }
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
        }
    }

    pub fn extrinsics(&self) -> Result<RigidTransform> {
        let m = &self.world_to_cam;
        if m.len() != 16 {
            return Err(Error::InvalidValue(format!("world_to_cam has {} entries, expected 16", m.len())));
        }
        let rotation = Mat3::from_fn(|r, c| m[4 * r + c]);
        if !crate::geom::is_rotation(&rotation, 1e-6) {
            return Err(Error::InvalidValue("world_to_cam rotation is not orthonormal".into()));
        }
        Ok(RigidTransform::new(rotation, Vec3::new(m[3], m[7], m[11])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskScores {
    pub confidence: f64,
    pub stability: f64,
}

/// Little-endian grayscale PFM (`Pf`); rows are stored bottom-up.
pub fn write_pfm(path: &Path, width: usize, height: usize, data: &[f32]) -> Result<()> {
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    for row in (0..height).rev() {
        for v in &data[row * width..(row + 1) * width] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a grayscale PFM into row-major, top-down order.
pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::format(path, m);
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PFM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "Pf" {
        return Err(bad("only single-channel `Pf` files are supported"));
    }
    let width: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("bad scale"))?;
    let little = scale < 0.0;
    let body = bytes.get(pos..).unwrap_or(&[]);
    if body.len() != width * height * 4 {
        return Err(bad(&format!("expected {} data bytes, found {}", width * height * 4, body.len())));
    }
    let mut data = vec![0.0f32; width * height];
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().unwrap();
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (row, col) = (height - 1 - i / width, i % width);
        data[row * width + col] = v;
    }
    Ok((width, height, data))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn sorted_entries(dir: &Path, prefix: &str, suffix: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(prefix) && n.ends_with(suffix))
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Loads one view directory.
pub fn load_view_dir(dir: &Path) -> Result<CameraView> {
    let cam: CameraFile = read_json(&dir.join("camera.json"))?;
    let (w, h, depth) = read_pfm(&dir.join("depth.pfm"))?;
    if (w, h) != (cam.width, cam.height) {
        return Err(Error::format(dir.join("depth.pfm"), format!("depth is {w}x{h}, camera is {}x{}", cam.width, cam.height)));
    }
    let mut masks = Vec::new();
    for png in sorted_entries(dir, "mask_", ".png")? {
        let img = image::open(&png).map_err(|e| Error::format(&png, e.to_string()))?.to_luma8();
        let (mw, mh) = (img.width() as usize, img.height() as usize);
        let bitmap = img.as_raw().iter().map(|&p| p != 0).collect();
        let scores: MaskScores = read_json(&png.with_extension("json"))?;
        masks.push(ScoredMask::new(mw, mh, bitmap, scores.confidence, scores.stability)?);
    }
    CameraView::new(cam.intrinsics(), cam.extrinsics()?, depth, masks)
}

/// Loads every `view_*` subdirectory in name order.
pub fn load_views(root: &Path) -> Result<Vec<CameraView>> {
    let dirs: Vec<PathBuf> = sorted_entries(root, "view_", "")?.into_iter().filter(|p| p.is_dir()).collect();
    if dirs.is_empty() {
        return Err(Error::format(root, "no view_* directories"));
    }
    dirs.iter().map(|d| load_view_dir(d)).collect()
}

pub fn save_view_dir(dir: &Path, view: &CameraView) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("camera.json"), &CameraFile::from_view(view))?;
    let k = &view.intrinsics;
    write_pfm(&dir.join("depth.pfm"), k.width, k.height, &view.depth)?;
    for (i, m) in view.masks.iter().enumerate() {
        let png = dir.join(format!("mask_{i:02}.png"));
        let raw: Vec<u8> = m.bitmap.iter().map(|&b| if b { 255 } else { 0 }).collect();
        let img = image::GrayImage::from_raw(m.width as u32, m.height as u32, raw).expect("mask dimensions");
        img.save(&png).map_err(|e| Error::format(&png, e.to_string()))?;
        write_json(&png.with_extension("json"), &MaskScores { confidence: m.confidence, stability: m.stability })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotz;

    #[test]
    fn view_dir_round_trip() {
        let k = Intrinsics { fx: 50.0, fy: 60.0, cx: 8.0, cy: 6.0, width: 16, height: 12 };
        let depth: Vec<f32> = (0..16 * 12).map(|i| (i % 5) as f32 * 0.25).collect();
        let bitmap: Vec<bool> = (0..16 * 12).map(|i| i % 3 == 0).collect();
        let mask = ScoredMask::new(16, 12, bitmap, 0.75, 0.5).unwrap();
        let view = CameraView::new(k, RigidTransform::new(rotz(0.5), Vec3::new(1.0, 2.0, 3.0)), depth, vec![mask]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_view_dir(&dir.path().join("view_00"), &view).unwrap();
        let back = load_views(dir.path()).unwrap();
        assert_eq!(back, vec![view]);
    }
}
