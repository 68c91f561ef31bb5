//! Agglomerative clustering with Ward linkage.
//!
//! Costs are stored as the increase in within-cluster sum of squares caused
//! by a merge, `|A||B| / (|A| + |B|) * ||c_A - c_B||^2`, and updated with the
//! Lance-Williams recurrence. Points are first put in a canonical order
//! (lexicographic by coordinate, then by input index); each active cluster
//! lives in the slot of its lowest-ranked member, and equal-cost merges are
//! resolved by the smallest `(slot_a, slot_b)` pair. This makes the result
//! independent of input order for distinct points.

use super::{validate, ClusterAssignment, Point};
use crate::error::Result;

/// Relative tolerance under which two merge costs are considered equal.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// True when `a` beats `b` by more than the tie tolerance.
#[inline]
pub(crate) fn strictly_less(a: f64, b: f64) -> bool {
    a < b - TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Canonical rank order: returns `order` such that `order[rank] = input index`.
pub(crate) fn canonical_order(points: &[Point]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[a].1.total_cmp(&points[b].1))
            .then(a.cmp(&b))
    });
    order
}

/// Condensed upper-triangular storage for pairwise costs.
struct Condensed {
    n: usize,
    values: Vec<f64>,
}

impl Condensed {
    fn new(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n.saturating_sub(1) / 2],
        }
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[self.index(a, b)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = self.index(a, b);
        self.values[idx] = v;
    }
}

/// Cluster `points` into `k` groups by Ward agglomeration.
///
/// When `points.len() <= k` every point becomes its own cluster.
pub fn ward_cluster(points: &[Point], k: usize) -> Result<ClusterAssignment> {
    validate(points, k)?;
    let n = points.len();
    if n <= k {
        return Ok(ClusterAssignment::singletons(n));
    }

    let order = canonical_order(points);
    let pts: Vec<Point> = order.iter().map(|&i| points[i]).collect();

    let mut cost = Condensed::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let dx = pts[i].0 - pts[j].0;
            let dy = pts[i].1 - pts[j].1;
            cost.set(i, j, 0.5 * (dx * dx + dy * dy));
        }
    }

    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    // parent[slot] links merged-away slots to the slot that absorbed them.
    let mut parent: Vec<usize> = (0..n).collect();

    // Nearest partner with a higher slot index, per row.
    let mut nn = vec![usize::MAX; n];
    let mut nn_cost = vec![f64::INFINITY; n];
    let refresh =
        |row: usize, cost: &Condensed, active: &[bool], nn: &mut [usize], nn_cost: &mut [f64]| {
            let mut best = usize::MAX;
            let mut best_cost = f64::INFINITY;
            let live = (row + 1..active.len()).filter(|&j| active[j]);
            for j in live {
                let c = cost.get(row, j);
                if best == usize::MAX || strictly_less(c, best_cost) {
                    best = j;
                    best_cost = c;
                }
            }
            nn[row] = best;
            nn_cost[row] = best_cost;
        };
    for row in 0..n {
        refresh(row, &cost, &active, &mut nn, &mut nn_cost);
    }

    for _ in 0..n - k {
        let mut a = usize::MAX;
        for row in 0..n {
            if active[row]
                && nn[row] != usize::MAX
                && (a == usize::MAX || strictly_less(nn_cost[row], nn_cost[a]))
            {
                a = row;
            }
        }
        let b = nn[a];
        let merged = cost.get(a, b);
        let (na, nb) = (size[a] as f64, size[b] as f64);

        active[b] = false;
        parent[b] = a;
        for x in 0..n {
            if !active[x] || x == a {
                continue;
            }
            let nx = size[x] as f64;
            let updated = ((nx + na) * cost.get(a, x) + (nx + nb) * cost.get(b, x) - nx * merged)
                / (na + nb + nx);
            cost.set(a, x, updated);
        }
        size[a] += size[b];

        for row in 0..n {
            if !active[row] {
                continue;
            }
            if row == a || nn[row] == a || nn[row] == b {
                refresh(row, &cost, &active, &mut nn, &mut nn_cost);
            } else if row < a {
                // The row's partner survived, so it is still its best column
                // except for a tie with the (lower-index) merged slot.
                let c = cost.get(row, a);
                if strictly_less(c, nn_cost[row])
                    || (!strictly_less(nn_cost[row], c) && a < nn[row])
                {
                    nn[row] = a;
                    nn_cost[row] = c;
                }
            }
        }
    }

    let root = |mut s: usize| {
        while parent[s] != s {
            s = parent[s];
        }
        s
    };
    let mut slot_of_input = vec![0usize; n];
    for (rank, &input) in order.iter().enumerate() {
        slot_of_input[input] = root(rank);
    }
    Ok(ClusterAssignment::from_keys(&slot_of_input))
}
