//! Minimum-cost assignment.

/// Cost charged for a part or joint left without a partner.
pub const UNMATCHED_PENALTY: f64 = 1e6;

/// Largest size solved by enumerating permutations.
pub const BRUTE_FORCE_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// For each prediction, the matched ground-truth index.
    pub pred_to_gt: Vec<Option<usize>>,
    /// Sum of matched costs plus one penalty per unmatched entry.
    pub total_cost: f64,
}

impl Matching {
    pub fn gt_to_pred(&self, n_gt: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n_gt];
        for (p, g) in self.pred_to_gt.iter().enumerate() {
            if let Some(g) = g {
                out[*g] = Some(p);
            }
        }
        out
    }
}

fn total(cost: &[Vec<f64>], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(r, &c)| cost[r][c]).sum()
}

/// Exact minimum over all permutations of a square matrix; the first
/// permutation in lexicographic order wins ties. Returns `(row -> column, cost)`.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (perm.clone(), total(cost, &perm));
    // lexicographic successor
    loop {
        let Some(i) = (1..n).rev().find(|&i| perm[i - 1] < perm[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
        perm.swap(i - 1, j);
        perm[i..].reverse();
        let c = total(cost, &perm);
        if c < best.1 {
            best = (perm.clone(), c);
        }
    }
    best
}

/// Hungarian method with row/column potentials, O(n^3), square matrix.
/// Returns `(row -> column, cost)`.
pub fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // 1-based arrays; column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for c in 1..=n {
                if used[c] {
                    continue;
                }
                let cur = cost[r0 - 1][c - 1] - u[r0] - v[c];
                if cur < minv[c] {
                    minv[c] = cur;
                    way[c] = col0;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    col1 = c;
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for c in 1..=n {
        perm[owner[c] - 1] = c - 1;
    }
    let c = total(cost, &perm);
    (perm, c)
}

/// Optimal matching of predictions (rows) to ground truth (columns). The
/// matrix is padded to square with [`UNMATCHED_PENALTY`]; sizes up to
/// [`BRUTE_FORCE_MAX`] are enumerated, larger ones use [`hungarian`].
pub fn match_parts(cost: &[Vec<f64>], n_gt: usize) -> Matching {
    let n_pred = cost.len();
    let n = n_pred.max(n_gt);
    let square: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| if r < n_pred && c < n_gt { cost[r][c] } else { UNMATCHED_PENALTY })
                .collect()
        })
        .collect();
    let (perm, total_cost) = if n <= BRUTE_FORCE_MAX {
        brute_force_assignment(&square)
    } else {
        hungarian(&square)
    };
    let pred_to_gt = (0..n_pred).map(|r| (perm[r] < n_gt).then_some(perm[r])).collect();
    Matching {
        pred_to_gt,
        total_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn swapped_pair() {
        let m = match_parts(&[vec![5.0, 0.0], vec![0.0, 5.0]], 2);
        assert_eq!(m.pred_to_gt, vec![Some(1), Some(0)]);
        assert_eq!(m.total_cost, 0.0);
    }

    #[test]
    fn fewer_predictions() {
        let m = match_parts(&[vec![1.0, 9.0, 9.0], vec![9.0, 9.0, 2.0]], 3);
        assert_eq!(m.pred_to_gt, vec![Some(0), Some(2)]);
        assert_eq!(m.total_cost, 3.0 + UNMATCHED_PENALTY);
        assert_eq!(m.gt_to_pred(3), vec![Some(0), None, Some(1)]);
    }

    #[test]
    fn six_by_six_agrees() {
        let mut rng = crate::seed::rng(6);
        use rand::Rng;
        let cost: Vec<Vec<f64>> = (0..6).map(|_| (0..6).map(|_| rng.gen::<f64>()).collect()).collect();
        assert_eq!(hungarian(&cost), brute_force_assignment(&cost));
    }

    proptest! {
        #[test]
        fn hungarian_matches_brute_force(n in 1usize..=7, vals in prop::collection::vec(0.0f64..100.0, 49)) {
            let cost: Vec<Vec<f64>> = (0..n).map(|r| vals[r * 7..r * 7 + n].to_vec()).collect();
            let (_, hc) = hungarian(&cost);
            let (_, bc) = brute_force_assignment(&cost);
            prop_assert!((hc - bc).abs() <= 1e-9 * bc.abs().max(1.0));
        }

        #[test]
        fn cost_invariant_under_prediction_order(vals in prop::collection::vec(0.0f64..10.0, 12), shift in 0usize..4) {
            let cost: Vec<Vec<f64>> = (0..4).map(|r| vals[r * 3..r * 3 + 3].to_vec()).collect();
            let mut rotated = cost.clone();
            rotated.rotate_left(shift);
            let a = match_parts(&cost, 3);
            let b = match_parts(&rotated, 3);
            prop_assert!((a.total_cost - b.total_cost).abs() < 1e-9);
        }
    }
}
