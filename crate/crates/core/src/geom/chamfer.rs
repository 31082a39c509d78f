use super::{KdTree, PointCloud, Vec3};
use crate::{Error, Exec, Result};

/// Reported Chamfer values are multiplied by this factor.
pub const CHAMFER_SCALE: f64 = 1000.0;
/// Tag written into reports describing [`chamfer`]'s convention.
pub const CHAMFER_CONVENTION: &str = "sum_of_directed_mean_squared_nn_x1000";

/// Symmetric Chamfer distance: mean squared nearest-neighbour distance from
/// `a` to `b` plus the same from `b` to `a`, times [`CHAMFER_SCALE`].
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    chamfer_with(Exec::default(), a, b)
}

pub fn chamfer_with(exec: Exec, a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("chamfer needs two non-empty clouds"));
    }
    let ab = directed_mean(exec, &a.points, &b.points);
    let ba = directed_mean(exec, &b.points, &a.points);
    Ok((ab + ba) * CHAMFER_SCALE)
}

fn directed_mean(exec: Exec, from: &[Vec3], to: &[Vec3]) -> f64 {
    directed_mean_in(exec, from, &KdTree::new(to))
}

/// Mean squared distance from `from` to the points indexed by `tree`.
pub(crate) fn directed_mean_in(exec: Exec, from: &[Vec3], tree: &KdTree) -> f64 {
    let d = exec.map_slice(from, |p| tree.nearest(p).expect("non-empty").1);
    d.iter().sum::<f64>() / from.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_single_points() {
        let a = PointCloud::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()]);
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        let p = PointCloud::new(vec![Vec3::zeros()]);
        let q = PointCloud::new(vec![Vec3::x()]);
        assert_eq!(chamfer(&p, &q).unwrap(), 2000.0);
    }

    #[test]
    fn empty_rejected() {
        let a = PointCloud::new(vec![Vec3::zeros()]);
        assert!(chamfer(&a, &PointCloud::default()).is_err());
    }

    #[test]
    fn serial_matches_parallel() {
        let a = PointCloud::new((0..300).map(|i| Vec3::new(i as f64 * 0.01, (i % 7) as f64, 0.0)).collect());
        let b = PointCloud::new((0..200).map(|i| Vec3::new(i as f64 * 0.013, 0.5, (i % 3) as f64)).collect());
        assert_eq!(
            chamfer_with(Exec::Serial, &a, &b).unwrap(),
            chamfer_with(Exec::Parallel, &a, &b).unwrap()
        );
    }
}
