use super::{dist2, Vec3};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

/// Exact nearest-neighbour index over a fixed point set.
///
/// Queries return the same `(index, squared distance)` a linear scan would,
/// with ties resolved toward the lowest point index.
#[derive(Debug, Clone)]
pub struct KdTree {
    /// Stored in tree order after construction.
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    /// Per node `[min x, min y, min z, max x, max y, max z]`.
    bounds: Vec<[f64; 6]>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree.points = tree.order.iter().map(|&i| points[i]).collect();
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[start..end] {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        self.bounds.push([lo.x, lo.y, lo.z, hi.x, hi.y, hi.z]);
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = (hi - lo).imax();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { left, right };
        id
    }

    /// Lower bound on the squared distance from `q` to any point of `node`,
    /// summed in the same order as [`dist2`] so it never exceeds it.
    #[inline(always)]
    fn box_dist2(&self, node: usize, q: &[f64; 3]) -> f64 {
        let b = &self.bounds[node];
        let gap = |a: usize| {
            if q[a] < b[a] {
                b[a] - q[a]
            } else if q[a] > b[a + 3] {
                q[a] - b[a + 3]
            } else {
                0.0
            }
        };
        let (dx, dy, dz) = (gap(0), gap(1), gap(2));
        dx * dx + dy * dy + dz * dz
    }

    /// Nearest point to `q` as `(index, squared distance)`.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        // a median-split tree is at most ~log2(n) deep and each level leaves
        // at most one pending sibling, so this never overflows
        let qa = [q.x, q.y, q.z];
        let mut stack = [(0usize, 0f64); usize::BITS as usize];
        stack[0] = (0, self.box_dist2(0, &qa));
        let mut len = 1;
        while len > 0 {
            len -= 1;
            let (node, bound) = stack[len];
            if bound > best.1 {
                continue;
            }
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    for k in start..end {
                        let i = self.order[k];
                        let d = dist2(q, &self.points[k]);
                        if d < best.1 || (d == best.1 && i < best.0) {
                            best = (i, d);
                        }
                    }
                }
                Node::Split { left, right } => {
                    let (bl, br) = (self.box_dist2(left, &qa), self.box_dist2(right, &qa));
                    let (near, far) = if bl <= br { ((left, bl), (right, br)) } else { ((right, br), (left, bl)) };
                    if far.1 <= best.1 {
                        stack[len] = far;
                        len += 1;
                    }
                    if near.1 <= best.1 {
                        stack[len] = near;
                        len += 1;
                    }
                }
            }
        }
        Some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn matches_linear_scan() {
        let mut rng = crate::seed::rng(3);
        let pts: Vec<Vec3> = (0..700)
            .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen::<f64>() * 0.1))
            .collect();
        let tree = KdTree::new(&pts);
        for _ in 0..300 {
            let q = Vec3::new(rng.gen(), rng.gen(), rng.gen());
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, p) in pts.iter().enumerate() {
                let d = dist2(&q, p);
                if d < best.1 {
                    best = (i, d);
                }
            }
            assert_eq!(tree.nearest(&q), Some(best));
        }
    }

    #[test]
    fn far_queries_match_linear_scan() {
        let mut rng = crate::seed::rng(4);
        let pts: Vec<Vec3> = (0..2000)
            .map(|_| Vec3::new(rng.gen(), rng.gen(), 0.0))
            .collect();
        let tree = KdTree::new(&pts);
        for _ in 0..100 {
            let q = Vec3::new(rng.gen::<f64>() * 10.0 - 5.0, rng.gen(), 3.0);
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, p) in pts.iter().enumerate() {
                let d = dist2(&q, p);
                if d < best.1 {
                    best = (i, d);
                }
            }
            assert_eq!(tree.nearest(&q), Some(best));
        }
    }

    #[test]
    fn duplicates_resolve_to_lowest_index() {
        let pts = vec![Vec3::x(); 40];
        let tree = KdTree::new(&pts);
        assert_eq!(tree.nearest(&Vec3::zeros()), Some((0, 1.0)));
        assert!(KdTree::new(&[]).nearest(&Vec3::zeros()).is_none());
    }
}
