use rand::Rng;

use super::{PointCloud, TriMesh, Vec3};
use crate::{seed, Error, Result};

/// `n` points drawn area-uniformly from the mesh surface: a face is picked
/// with probability proportional to its area, then a barycentric-uniform
/// point inside it. Deterministic in `seed`.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if mesh.faces.is_empty() {
        return Err(Error::EmptyInput("mesh has no faces"));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateGeometry("mesh has zero surface area".into()));
    }
    let mut rng = seed::rng(seed);
    let points = (0..n)
        .map(|_| {
            let target = rng.gen::<f64>() * total;
            let face = cumulative
                .partition_point(|&c| c <= target)
                .min(mesh.faces.len() - 1);
            let [a, b, c] = mesh.triangle(face);
            let (u, v): (f64, f64) = (rng.gen(), rng.gen());
            let su = u.sqrt();
            a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v)
        })
        .collect::<Vec<Vec3>>();
    Ok(PointCloud::new(points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn unit_square_is_uniform() {
        let pc = sample_surface(&unit_square(), 10_000, 11).unwrap();
        let mut mean = Vec3::zeros();
        for p in &pc.points {
            assert_eq!(p.z, 0.0);
            assert!((0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y));
            mean += p;
        }
        mean /= pc.len() as f64;
        assert!((mean - Vec3::new(0.5, 0.5, 0.0)).norm() < 0.02, "{mean:?}");
    }

    #[test]
    fn deterministic() {
        let m = unit_square();
        assert_eq!(sample_surface(&m, 500, 4).unwrap(), sample_surface(&m, 500, 4).unwrap());
        assert_ne!(sample_surface(&m, 500, 4).unwrap(), sample_surface(&m, 500, 5).unwrap());
    }

    #[test]
    fn area_weighted_face_choice() {
        // areas 9:1; x < 3 lies in the big triangle, x > 3 in the small one
        let m = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(3.0, 0.0, 0.0),
                Vec3::new(0.0, 6.0, 0.0),
                Vec3::new(4.0, 0.0, 0.0),
                Vec3::new(3.0, 2.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 4]],
        )
        .unwrap();
        assert!((m.face_area(0) / m.face_area(1) - 9.0).abs() < 1e-12);
        let pc = sample_surface(&m, 10_000, 2024).unwrap();
        let big = pc.points.iter().filter(|p| p.x < 3.0).count() as f64;
        // binomial(10000, 0.9): mean 9000, sigma 30
        assert!((big - 9000.0).abs() <= 90.0, "{big}");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            sample_surface(&TriMesh::default(), 10, 0),
            Err(Error::EmptyInput(_))
        ));
        let flat = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0], vec![[0, 1, 2]]).unwrap();
        assert!(matches!(sample_surface(&flat, 10, 0), Err(Error::DegenerateGeometry(_))));
    }
}
