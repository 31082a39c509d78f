//! Wavefront OBJ (`v`/`f` only) and PLY point clouds (ASCII or binary
//! little-endian, optional integer `label` property).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{PointCloud, TriMesh, Vec3};
use crate::{Error, Result};

pub fn write_obj_string(mesh: &TriMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 40 + mesh.faces.len() * 20);
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// Parses `v` and `f` records; polygons are fan-triangulated, texture and
/// normal references are dropped, negative indices are relative.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut idx: Vec<u32> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for x in &mut c {
                    let t = tok
                        .next()
                        .ok_or_else(|| Error::syntax(lineno + 1, 1, "vertex needs three coordinates"))?;
                    *x = t
                        .parse::<f64>()
                        .map_err(|e| Error::syntax(lineno + 1, 1, format!("bad vertex: {e}")))?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                idx.clear();
                for t in tok {
                    let first = t.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| Error::syntax(lineno + 1, 1, format!("bad face index `{t}`")))?;
                    let resolved = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(Error::syntax(lineno + 1, 1, format!("face index {i} out of range")));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(Error::syntax(lineno + 1, 1, "face needs at least three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn read_obj(path: &Path) -> Result<TriMesh> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_obj(path: &Path, mesh: &TriMesh) -> Result<()> {
    fs::write(path, write_obj_string(mesh)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

pub fn write_ply_bytes(pc: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let mut header = String::from("ply\n");
    header.push_str(match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    let _ = writeln!(header, "element vertex {}", pc.len());
    header.push_str("property double x\nproperty double y\nproperty double z\n");
    if pc.labels.is_some() {
        header.push_str("property int label\n");
    }
    header.push_str("end_header\n");
    let mut out = header.into_bytes();
    for (i, p) in pc.points.iter().enumerate() {
        let label = pc.labels.as_ref().map(|l| l[i]);
        match format {
            PlyFormat::Ascii => {
                let mut line = format!("{} {} {}", p.x, p.y, p.z);
                if let Some(l) = label {
                    let _ = write!(line, " {l}");
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
            PlyFormat::BinaryLittleEndian => {
                for c in [p.x, p.y, p.z] {
                    out.extend_from_slice(&c.to_le_bytes());
                }
                if let Some(l) = label {
                    out.extend_from_slice(&l.to_le_bytes());
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

/// Reads the `vertex` element (which must be the first element) of a PLY file.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let bad = |m: &str| Error::syntax(0, 0, format!("ply: {m}"));
    let header_end = find_subslice(bytes, b"end_header")
        .ok_or_else(|| bad("missing end_header"))?;
    let body_start = bytes[header_end..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|p| header_end + p + 1)
        .ok_or_else(|| bad("truncated header"))?;
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| bad("header is not UTF-8"))?;

    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(bad("missing magic"));
    }
    let mut format = None;
    let mut count = None;
    let mut props: Vec<(String, Scalar)> = Vec::new();
    let mut in_vertex = false;
    let mut seen_element = false;
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLittleEndian),
            ["format", other, _] => return Err(bad(&format!("unsupported format {other}"))),
            ["element", name, n] => {
                if !seen_element && *name != "vertex" {
                    return Err(bad("vertex must be the first element"));
                }
                seen_element = true;
                in_vertex = *name == "vertex";
                if in_vertex {
                    count = Some(n.parse::<usize>().map_err(|_| bad("bad vertex count"))?);
                }
            }
            ["property", "list", ..] if in_vertex => return Err(bad("list properties on vertices")),
            ["property", ty, name] if in_vertex => {
                let s = Scalar::parse(ty).ok_or_else(|| bad(&format!("unknown type {ty}")))?;
                props.push((name.to_string(), s));
            }
            _ => {}
        }
    }
    let format = format.ok_or_else(|| bad("missing format"))?;
    let count = count.ok_or_else(|| bad("missing vertex element"))?;
    let col = |n: &str| props.iter().position(|(p, _)| p == n);
    let (xi, yi, zi) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(bad("vertex needs x, y, z")),
    };
    let li = col("label");

    let mut points = Vec::with_capacity(count);
    let mut labels = li.map(|_| Vec::with_capacity(count));
    let body = &bytes[body_start..];
    match format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body).map_err(|_| bad("body is not UTF-8"))?;
            let mut rows = text.lines().filter(|l| !l.trim().is_empty());
            for _ in 0..count {
                let row = rows.next().ok_or_else(|| bad("truncated body"))?;
                let v: Vec<f64> = row
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad number"))?;
                if v.len() < props.len() {
                    return Err(bad("short row"));
                }
                points.push(Vec3::new(v[xi], v[yi], v[zi]));
                if let (Some(l), Some(i)) = (labels.as_mut(), li) {
                    l.push(v[i] as i32);
                }
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let stride: usize = props.iter().map(|(_, s)| s.size()).sum();
            let offsets: Vec<usize> = props
                .iter()
                .scan(0, |acc, (_, s)| {
                    let o = *acc;
                    *acc += s.size();
                    Some(o)
                })
                .collect();
            if body.len() < stride * count {
                return Err(bad("truncated body"));
            }
            for r in 0..count {
                let row = &body[r * stride..(r + 1) * stride];
                let get = |i: usize| props[i].1.read_le(&row[offsets[i]..]);
                points.push(Vec3::new(get(xi), get(yi), get(zi)));
                if let (Some(l), Some(i)) = (labels.as_mut(), li) {
                    l.push(get(i) as i32);
                }
            }
        }
    }
    match labels {
        Some(l) => PointCloud::with_labels(points, l),
        None => Ok(PointCloud::new(points)),
    }
}

fn find_subslice(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_ply(path: &Path, pc: &PointCloud, format: PlyFormat) -> Result<()> {
    fs::write(path, write_ply_bytes(pc, format)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn obj_ignores_normals_and_textures() {
        let text = "# comment\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf 1/1/1 2/2/1 3/3/1 4/4/1\nf -4//1 -2//1 -1//1\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3], [0, 2, 3]]);
        let out = write_obj_string(&m);
        assert!(!out.contains("vn") && !out.contains("vt"));
        assert_eq!(parse_obj(&out).unwrap(), m);
    }

    #[test]
    fn obj_rejects_out_of_range() {
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
    }

    #[test]
    fn ply_with_float_and_uchar_props() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty int label\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for (p, l) in [([1.0f32, 2.0, 3.0], 4i32), ([-1.0, 0.5, 0.0], -1)] {
            for c in p {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
            bytes.push(255);
            bytes.extend_from_slice(&l.to_le_bytes());
        }
        let pc = parse_ply(&bytes).unwrap();
        assert_eq!(pc.points[1], Vec3::new(-1.0, 0.5, 0.0));
        assert_eq!(pc.labels, Some(vec![4, -1]));
    }

    proptest! {
        #[test]
        fn ply_round_trip(
            pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3, -1i32..20), 0..50),
            binary in any::<bool>(),
            labeled in any::<bool>(),
        ) {
            let points = pts.iter().map(|&(x, y, z, _)| Vec3::new(x, y, z)).collect();
            let pc = if labeled {
                PointCloud::with_labels(points, pts.iter().map(|p| p.3).collect()).unwrap()
            } else {
                PointCloud::new(points)
            };
            let fmt = if binary { PlyFormat::BinaryLittleEndian } else { PlyFormat::Ascii };
            prop_assert_eq!(parse_ply(&write_ply_bytes(&pc, fmt)).unwrap(), pc);
        }
    }
}
