//! Lloyd's k-means with k-means++ seeding.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sq_dist, validate, ClusterAssignment, Point};
use crate::error::Result;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: ClusterAssignment,
    pub centers: Vec<Point>,
    /// Within-cluster SSE after seeding and after every Lloyd iteration.
    pub sse_trace: Vec<f64>,
}

impl KMeansFit {
    pub fn sse(&self) -> f64 {
        *self.sse_trace.last().expect("trace is never empty")
    }
}

fn nearest(p: Point, centers: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(p, *c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus_seeds(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(*p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(*p, c));
        }
    }
    centers
}

fn sse(points: &[Point], labels: &[usize], centers: &[Point]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(*p, centers[l]))
        .sum()
}

/// Gives every empty cluster the point farthest from its center, taken from
/// a cluster that has at least two members. Never increases the SSE.
pub(crate) fn repair_empty(points: &[Point], labels: &mut [usize], centers: &mut [Point]) {
    let k = centers.len();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut donor: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(*p, centers[labels[i]]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        let Some((i, _)) = donor else {
            return;
        };
        labels[i] = empty;
        centers[empty] = points[i];
    }
}

fn update_centers(points: &[Point], labels: &[usize], centers: &mut [Point]) {
    let k = centers.len();
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l].0 += p.0;
        sums[l].1 += p.1;
        sums[l].2 += 1;
    }
    for (c, s) in centers.iter_mut().zip(sums) {
        if s.2 > 0 {
            *c = (s.0 / s.2 as f64, s.1 / s.2 as f64);
        }
    }
}

/// Full k-means fit including the per-iteration SSE trace.
pub fn kmeans_fit(points: &[Point], k: usize, seed: u64) -> Result<KMeansFit> {
    validate(points, k)?;
    let n = points.len();
    if n <= k {
        return Ok(KMeansFit {
            assignment: ClusterAssignment::singletons(n),
            centers: points.to_vec(),
            sse_trace: vec![0.0],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_seeds(points, k, &mut rng);
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(*p, &centers).0).collect();
    repair_empty(points, &mut labels, &mut centers);
    let mut trace = vec![sse(points, &labels, &centers)];

    for _ in 0..MAX_ITERATIONS {
        update_centers(points, &labels, &mut centers);
        let mut next: Vec<usize> = points.iter().map(|p| nearest(*p, &centers).0).collect();
        repair_empty(points, &mut next, &mut centers);
        let changed = next != labels;
        labels = next;
        trace.push(sse(points, &labels, &centers));
        if !changed {
            break;
        }
    }

    Ok(KMeansFit {
        assignment: ClusterAssignment::from_labels(labels, k),
        centers,
        sse_trace: trace,
    })
}

pub fn kmeans_cluster(points: &[Point], k: usize, seed: u64) -> Result<ClusterAssignment> {
    Ok(kmeans_fit(points, k, seed)?.assignment)
}
