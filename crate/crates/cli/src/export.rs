//! Posed-geometry writers: multi-object OBJ and self-contained glTF 2.0.

use std::fmt::Write as _;

use artkit::geom::TriMesh;
use base64::Engine as _;
use serde_json::json;

/// One `o <name>` block per part, global vertex numbering.
pub fn write_obj_parts(parts: &[(String, TriMesh)]) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    for (name, mesh) in parts {
        let _ = writeln!(out, "o {name}");
        for v in &mesh.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &mesh.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] as usize + base, f[1] as usize + base, f[2] as usize + base);
        }
        base += mesh.vertices.len();
    }
    out
}

/// glTF 2.0 JSON with an embedded base64 buffer: one mesh and one node per
/// part, f32 positions and u32 indices.
pub fn write_gltf(parts: &[(String, TriMesh)]) -> String {
    let mut bin: Vec<u8> = Vec::new();
    let mut views = Vec::new();
    let mut accessors = Vec::new();
    let mut meshes = Vec::new();
    let mut nodes = Vec::new();
    for (i, (name, mesh)) in parts.iter().enumerate() {
        let mut lo = [f32::INFINITY; 3];
        let mut hi = [f32::NEG_INFINITY; 3];
        let start = bin.len();
        for v in &mesh.vertices {
            for a in 0..3 {
                let x = v[a] as f32;
                lo[a] = lo[a].min(x);
                hi[a] = hi[a].max(x);
                bin.extend_from_slice(&x.to_le_bytes());
            }
        }
        views.push(json!({"buffer": 0, "byteOffset": start, "byteLength": bin.len() - start, "target": 34962}));
        accessors.push(json!({
            "bufferView": 2 * i, "componentType": 5126, "count": mesh.vertices.len(),
            "type": "VEC3", "min": lo, "max": hi
        }));
        let start = bin.len();
        for f in &mesh.faces {
            for idx in f {
                bin.extend_from_slice(&idx.to_le_bytes());
            }
        }
        views.push(json!({"buffer": 0, "byteOffset": start, "byteLength": bin.len() - start, "target": 34963}));
        accessors.push(json!({
            "bufferView": 2 * i + 1, "componentType": 5125, "count": mesh.faces.len() * 3, "type": "SCALAR"
        }));
        meshes.push(json!({
            "name": name,
            "primitives": [{"attributes": {"POSITION": 2 * i}, "indices": 2 * i + 1, "mode": 4}]
        }));
        nodes.push(json!({"name": name, "mesh": i}));
    }
    let uri = format!(
        "data:application/octet-stream;base64,{}",
        base64::engine::general_purpose::STANDARD.encode(&bin)
    );
    let doc = json!({
        "asset": {"version": "2.0", "generator": "artkit"},
        "scene": 0,
        "scenes": [{"nodes": (0..parts.len()).collect::<Vec<_>>()}],
        "nodes": nodes,
        "meshes": meshes,
        "accessors": accessors,
        "bufferViews": views,
        "buffers": [{"byteLength": bin.len(), "uri": uri}]
    });
    serde_json::to_string_pretty(&doc).expect("gltf serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use artkit::geom::Vec3;

    fn two() -> Vec<(String, TriMesh)> {
        vec![
            ("a".into(), TriMesh::cuboid(Vec3::zeros(), Vec3::repeat(1.0))),
            ("b".into(), TriMesh::cuboid(Vec3::repeat(2.0), Vec3::repeat(3.0))),
        ]
    }

    #[test]
    fn obj_offsets_indices() {
        let text = write_obj_parts(&two());
        let merged = artkit::geom::io::parse_obj(&text).unwrap();
        assert_eq!(merged.vertices.len(), 16);
        assert_eq!(merged.faces.len(), 24);
        assert_eq!(text.matches("\no b\n").count(), 1);
    }

    #[test]
    fn gltf_is_valid() {
        let text = write_gltf(&two());
        let g = gltf::Gltf::from_slice(text.as_bytes()).unwrap();
        assert_eq!(g.meshes().count(), 2);
        let buffers = gltf::import_buffers(&g.document, None, None).unwrap();
        let mesh = g.meshes().nth(1).unwrap();
        let prim = mesh.primitives().next().unwrap();
        let reader = prim.reader(|b| Some(&buffers[b.index()]));
        let pos: Vec<[f32; 3]> = reader.read_positions().unwrap().collect();
        assert_eq!(pos.len(), 8);
        assert!(pos.iter().all(|p| p.iter().all(|&x| (2.0..=3.0).contains(&x))));
        let idx: Vec<u32> = reader.read_indices().unwrap().into_u32().collect();
        assert_eq!(idx.len(), 36);
    }
}
