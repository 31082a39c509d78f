//! Marching cubes over the cell-center lattice.
//!
//! The field is clamp-extended by half a cell so the lattice spans the whole
//! frame: surfaces that run into the frame boundary reach it, and fields that
//! stay clear of it give closed meshes. The case table is generated from the
//! cube faces: on an ambiguous face the two inside corners are kept apart,
//! and since neighbouring cubes see the same face the same way, the result
//! has no cracks.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::OccupancyGrid;
use crate::geom::{TriMesh, Vec3};
use crate::{Error, Exec, Result};

fn corner(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

/// `(first corner, direction)`; the second corner is `first | 1 << dir`.
fn edges() -> [(usize, usize); 12] {
    let mut out = [(0, 0); 12];
    let mut n = 0;
    for dir in 0..3 {
        for c in 0..8 {
            if c & (1 << dir) == 0 {
                out[n] = (c, dir);
                n += 1;
            }
        }
    }
    out
}

fn edge_id(a: usize, b: usize) -> usize {
    let (lo, hi) = (a.min(b), a.max(b));
    let dir = (hi ^ lo).trailing_zeros() as usize;
    edges().iter().position(|&e| e == (lo, dir)).expect("cube edge")
}

fn point(c: usize) -> Vec3 {
    let [x, y, z] = corner(c);
    Vec3::new(x as f64, y as f64, z as f64)
}

fn edge_mid(e: usize) -> Vec3 {
    let (c, dir) = edges()[e];
    (point(c) + point(c | 1 << dir)) * 0.5
}

/// Stand-in edge index for a loop's centroid vertex.
const CENTROID: u8 = 12;

/// One surface loop inside a cube: its ring of cube edges and a
/// triangulation wound so that normals point from inside to outside.
struct Loop {
    ring: Vec<u8>,
    tris: Vec<[u8; 3]>,
}

fn table() -> &'static Vec<Vec<Loop>> {
    static TABLE: OnceLock<Vec<Vec<Loop>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..256).map(case).collect())
}

fn faces_of(e: usize) -> [(usize, usize); 2] {
    let (c, dir) = edges()[e];
    let (a, b) = ((dir + 1) % 3, (dir + 2) % 3);
    [(a, (c >> a) & 1), (b, (c >> b) & 1)]
}

fn share_face(e1: usize, e2: usize) -> bool {
    faces_of(e1).iter().any(|f| faces_of(e2).contains(f))
}

/// Fan from an apex whose diagonals never join two edges of one face (such
/// a diagonal could coincide with one from the neighbouring cube); loops
/// without such an apex get a centroid fan.
fn triangulate(ring: &[usize]) -> Vec<[u8; 3]> {
    let n = ring.len();
    let apex = (0..n).find(|&p| (2..n.saturating_sub(1)).all(|w| !share_face(ring[p], ring[(p + w) % n])));
    match apex {
        Some(p) => (1..n - 1)
            .map(|w| [ring[p] as u8, ring[(p + w) % n] as u8, ring[(p + w + 1) % n] as u8])
            .collect(),
        None => (0..n).map(|w| [CENTROID, ring[w] as u8, ring[(w + 1) % n] as u8]).collect(),
    }
}

fn case(mask: usize) -> Vec<Loop> {
    let inside = |c: usize| mask & (1 << c) != 0;
    let mut next = [usize::MAX; 12];
    for axis in 0..3 {
        for side in 0..2 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let q: Vec<usize> = [(0, 0), (1, 0), (1, 1), (0, 1)]
                .iter()
                .map(|&(a, b)| side << axis | a << u | b << v)
                .collect();
            let mut normal = Vec3::zeros();
            normal[axis] = if side == 1 { 1.0 } else { -1.0 };
            let crossing: Vec<usize> = (0..4).filter(|&m| inside(q[m]) != inside(q[(m + 1) % 4])).collect();
            let mut segments: Vec<(usize, usize, Vec3)> = Vec::new();
            match crossing.len() {
                0 => {}
                2 => {
                    let e1 = edge_id(q[crossing[0]], q[(crossing[0] + 1) % 4]);
                    let e2 = edge_id(q[crossing[1]], q[(crossing[1] + 1) % 4]);
                    let ins: Vec<Vec3> = q.iter().filter(|&&c| inside(c)).map(|&c| point(c)).collect();
                    let centroid = ins.iter().sum::<Vec3>() / ins.len() as f64;
                    segments.push((e1, e2, centroid));
                }
                4 => {
                    for m in (0..4).filter(|&m| inside(q[m])) {
                        let before = edge_id(q[(m + 3) % 4], q[m]);
                        let after = edge_id(q[m], q[(m + 1) % 4]);
                        segments.push((before, after, point(q[m])));
                    }
                }
                _ => unreachable!("odd crossing count on a face"),
            }
            for (a, b, inner) in segments {
                let s = edge_mid(b) - edge_mid(a);
                let (from, to) = if normal.cross(&s).dot(&(inner - edge_mid(a))) < 0.0 { (a, b) } else { (b, a) };
                debug_assert_eq!(next[from], usize::MAX);
                next[from] = to;
            }
        }
    }
    let mut loops = Vec::new();
    let mut seen = [false; 12];
    for start in 0..12 {
        if next[start] == usize::MAX || seen[start] {
            continue;
        }
        let mut ring = vec![start];
        seen[start] = true;
        let mut e = next[start];
        while e != start {
            seen[e] = true;
            ring.push(e);
            e = next[e];
        }
        loops.push(Loop {
            tris: triangulate(&ring),
            ring: ring.iter().map(|&e| e as u8).collect(),
        });
    }
    loops
}

struct Lattice<'a> {
    grid: &'a OccupancyGrid,
    dims: [usize; 3],
}

impl Lattice<'_> {
    fn coord(&self, axis: usize, m: usize) -> f64 {
        let n = self.grid.spec.resolution[axis];
        if m == 0 {
            0.0
        } else if m == n + 1 {
            1.0
        } else {
            (m as f64 - 0.5) / n as f64
        }
    }

    fn value(&self, m: [usize; 3]) -> f64 {
        let r = self.grid.spec.resolution;
        let c = |a: usize| m[a].saturating_sub(1).min(r[a] - 1);
        self.grid.get(c(0), c(1), c(2)) as f64
    }

    fn key(&self, m: [usize; 3], dir: usize) -> u64 {
        let [nx, ny, _] = self.dims;
        ((((m[2] * ny + m[1]) * nx + m[0]) * 3) + dir) as u64
    }
}

const CENTROID_KEY: u64 = 1 << 63;

struct Slab {
    keys: Vec<u64>,
    positions: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

/// Iso-surface of the grid in world coordinates.
pub fn marching_cubes(grid: &OccupancyGrid, iso: f64) -> Result<TriMesh> {
    marching_cubes_with(Exec::default(), grid, iso)
}

pub fn marching_cubes_with(exec: Exec, grid: &OccupancyGrid, iso: f64) -> Result<TriMesh> {
    let r = grid.spec.resolution;
    let lat = Lattice {
        grid,
        dims: [r[0] + 2, r[1] + 2, r[2] + 2],
    };
    let table = table();
    let edge_list = edges();
    let flip = grid.spec.frame.linear.determinant() < 0.0;

    let slabs = exec.map_range(lat.dims[2] - 1, |k| {
        let mut slab = Slab {
            keys: Vec::new(),
            positions: Vec::new(),
            faces: Vec::new(),
        };
        let mut local: HashMap<u64, u32> = HashMap::new();
        let [d0, d1, _] = lat.dims;
        let lat = &lat;
        let plane = |kk: usize| -> Vec<f64> {
            (0..d1).flat_map(|j| (0..d0).map(move |i| lat.value([i, j, kk]))).collect()
        };
        let layers = [plane(k), plane(k + 1)];
        for j in 0..lat.dims[1] - 1 {
            for i in 0..lat.dims[0] - 1 {
                let base = [i, j, k];
                let at = |c: usize| {
                    let o = corner(c);
                    [base[0] + o[0], base[1] + o[1], base[2] + o[2]]
                };
                let vals: [f64; 8] = std::array::from_fn(|c| {
                    let o = corner(c);
                    layers[o[2]][(j + o[1]) * d0 + i + o[0]]
                });
                let mask = (0..8).fold(0usize, |m, c| m | ((vals[c] >= iso) as usize) << c);
                let loops = &table[mask];
                if loops.is_empty() {
                    continue;
                }
                let mut vertex = |e: u8| -> u32 {
                    let (c0, dir) = edge_list[e as usize];
                    let c1 = c0 | 1 << dir;
                    let key = lat.key(at(c0), dir);
                    *local.entry(key).or_insert_with(|| {
                        let (m0, m1) = (at(c0), at(c1));
                        let (f0, f1) = (vals[c0], vals[c1]);
                        let t = ((iso - f0) / (f1 - f0)).clamp(0.0, 1.0);
                        let mut g = Vec3::zeros();
                        for a in 0..3 {
                            let (x0, x1) = (lat.coord(a, m0[a]), lat.coord(a, m1[a]));
                            g[a] = x0 + t * (x1 - x0);
                        }
                        slab.keys.push(key);
                        slab.positions.push(grid.spec.frame.to_world(&g));
                        (slab.positions.len() - 1) as u32
                    })
                };
                let mut ids = [u32::MAX; 12];
                for lp in loops {
                    for &e in &lp.ring {
                        ids[e as usize] = vertex(e);
                    }
                }
                for (li, lp) in loops.iter().enumerate() {
                    let mut centroid = u32::MAX;
                    if lp.tris.iter().any(|t| t.contains(&CENTROID)) {
                        let c = lp.ring.iter().map(|&e| slab.positions[ids[e as usize] as usize]).sum::<Vec3>()
                            / lp.ring.len() as f64;
                        slab.keys.push(CENTROID_KEY | ((lat.key(base, 0) / 3) << 2) | li as u64);
                        slab.positions.push(c);
                        centroid = (slab.positions.len() - 1) as u32;
                    }
                    for t in &lp.tris {
                        let f = t.map(|e| if e == CENTROID { centroid } else { ids[e as usize] });
                        slab.faces.push(if flip { [f[0], f[2], f[1]] } else { f });
                    }
                }
            }
        }
        slab
    });

    let mut global: HashMap<u64, u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for slab in slabs {
        let remap: Vec<u32> = slab
            .keys
            .iter()
            .zip(&slab.positions)
            .map(|(key, p)| {
                *global.entry(*key).or_insert_with(|| {
                    vertices.push(*p);
                    (vertices.len() - 1) as u32
                })
            })
            .collect();
        faces.extend(slab.faces.iter().map(|f| f.map(|v| remap[v as usize])));
    }
    if faces.is_empty() {
        return Err(Error::NoSurface);
    }
    TriMesh::new(vertices, faces)
}
