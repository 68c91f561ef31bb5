//! Independent reference implementations and fixtures shared by the
//! integration tests.

#![allow(dead_code)]

use fixlab::clustering::Point;
use fixlab::losses::{LossKind, PoolingSpec};
use fixlab::trainer::{backward, forward, FeatureStack, ReadoutModel};
use fixlab::{FixationPixelMap, GrayImage, ProbabilityMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sse(points: &[Point], members: &[usize]) -> f64 {
    let n = members.len() as f64;
    let cx = members.iter().map(|&i| points[i].0).sum::<f64>() / n;
    let cy = members.iter().map(|&i| points[i].1).sum::<f64>() / n;
    members
        .iter()
        .map(|&i| (points[i].0 - cx).powi(2) + (points[i].1 - cy).powi(2))
        .sum()
}

/// Agglomerative Ward clustering that recomputes every pairwise merge cost
/// from the member points at each step. Returns sorted member lists.
pub fn naive_ward(points: &[Point], k: usize) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    while clusters.len() > k {
        let mut best = (0, 1);
        let mut best_cost = f64::INFINITY;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut merged = clusters[a].clone();
                merged.extend(&clusters[b]);
                let cost =
                    sse(points, &merged) - sse(points, &clusters[a]) - sse(points, &clusters[b]);
                if cost < best_cost {
                    best_cost = cost;
                    best = (a, b);
                }
            }
        }
        let absorbed = clusters.remove(best.1);
        clusters[best.0].extend(absorbed);
    }
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort();
    clusters
}

/// Smallest total within-cluster SSE over every partition into exactly `k`
/// nonempty groups, with the labels attaining it.
pub fn best_partition(points: &[Point], k: usize) -> (f64, Vec<usize>) {
    fn go(
        points: &[Point],
        k: usize,
        labels: &mut Vec<usize>,
        used: usize,
        best: &mut (f64, Vec<usize>),
    ) {
        let i = labels.len();
        if i == points.len() {
            if used == k {
                let total: f64 = (0..k)
                    .map(|c| {
                        let members: Vec<usize> = (0..i).filter(|&j| labels[j] == c).collect();
                        sse(points, &members)
                    })
                    .sum();
                if total < best.0 {
                    *best = (total, labels.clone());
                }
            }
            return;
        }
        if k - used > points.len() - i {
            return;
        }
        for c in 0..(used + 1).min(k) {
            labels.push(c);
            go(points, k, labels, used.max(c + 1), best);
            labels.pop();
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    go(points, k, &mut Vec::new(), 0, &mut best);
    best
}

/// ROC area with a threshold at each distinct fixation value, counting
/// every pixel against every threshold.
pub fn brute_force_auc_judd(s: &GrayImage, fixations: &FixationPixelMap) -> f64 {
    let mask = fixations.mask();
    let n_pos = fixations.len() as f64;
    let n_neg = (s.len() - fixations.len()) as f64;
    let mut thresholds: Vec<f64> = fixations
        .points()
        .iter()
        .map(|&(x, y)| s.get(x, y))
        .collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let mut area = 0.0;
    let mut prev = (0.0, 0.0);
    for t in thresholds {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (v, fixated) in s.data().iter().zip(&mask) {
            if *v >= t {
                if *fixated {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let point = (fp as f64 / n_neg, tp as f64 / n_pos);
        area += (point.0 - prev.0) * (point.1 + prev.1) / 2.0;
        prev = point;
    }
    area += (1.0 - prev.0) * (1.0 + prev.1) / 2.0;
    area
}

/// `w x h` map of distinct values with `n_fix` distinct fixated cells.
pub fn distinct_instance(
    seed: u64,
    w: usize,
    h: usize,
    n_fix: usize,
) -> (GrayImage, FixationPixelMap) {
    let mut r = rng(seed);
    let mut values: Vec<f64> = (0..w * h)
        .map(|i| i as f64 + r.random::<f64>() * 0.5)
        .collect();
    for i in (1..values.len()).rev() {
        values.swap(i, r.random_range(0..=i));
    }
    let mut cells: Vec<usize> = (0..w * h).collect();
    for i in (1..cells.len()).rev() {
        cells.swap(i, r.random_range(0..=i));
    }
    let points = cells[..n_fix].iter().map(|&c| (c % w, c / w)).collect();
    (
        GrayImage::new(w, h, values).unwrap(),
        FixationPixelMap::new(w, h, points).unwrap(),
    )
}

pub fn random_points(seed: u64, n: usize, extent: f64) -> Vec<Point> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| (r.random::<f64>() * extent, r.random::<f64>() * extent))
        .collect()
}

/// Gaussian bump of width `sigma` at `(cx, cy)`.
pub fn gaussian_blob(w: usize, h: usize, cx: f64, cy: f64, sigma: f64) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| {
        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        (-d2 / (2.0 * sigma * sigma)).exp()
    })
    .unwrap()
}

/// Readout with small seeded weights, large enough that the output varies
/// across cells.
pub fn random_model(seed: u64, channels: usize) -> ReadoutModel {
    let mut r = rng(seed);
    ReadoutModel {
        weights: (0..channels).map(|_| r.random_range(-1e-3..1e-3)).collect(),
        bias: r.random_range(-1.0..1.0),
    }
}

/// Per cell, the row-major index of the first window maximum.
pub fn window_argmax(img: &GrayImage, radius: usize) -> Vec<usize> {
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut best = None;
            for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                for xx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                    let i = yy * w + xx;
                    if best.is_none_or(|b: usize| img.data()[i] > img.data()[b]) {
                        best = Some(i);
                    }
                }
            }
            out.push(best.unwrap());
        }
    }
    out
}

/// Largest relative error between the analytic parameter gradient from
/// `backward` and central differences of the loss with step `h`.
///
/// For the pooled loss the step on a parameter is divided by ten (at most
/// three times) while it still changes some window's argmax in the output.
pub fn readout_grad_error(
    model: &ReadoutModel,
    feats: &FeatureStack,
    label: &ProbabilityMap,
    kind: LossKind,
    spec: PoolingSpec,
    h: f64,
) -> f64 {
    let eps = fixlab::fixation::DEFAULT_EPS;
    let loss = |p: &[f64]| {
        backward(&ReadoutModel::from_params(p), feats, label, kind, spec, eps)
            .unwrap()
            .0
    };
    let routing = |p: &[f64]| match kind {
        LossKind::Kld => Vec::new(),
        LossKind::PoolingKld => window_argmax(
            &forward(&ReadoutModel::from_params(p), feats).unwrap(),
            spec.radius(),
        ),
    };
    let (_, analytic) = backward(model, feats, label, kind, spec, eps).unwrap();
    let params = model.params();
    let base = routing(&params);
    let mut worst: f64 = 0.0;
    for j in 0..params.len() {
        let shifted = |t: f64| {
            let mut p = params.clone();
            p[j] += t;
            p
        };
        let mut step = h;
        for _ in 0..3 {
            if routing(&shifted(step)) == base && routing(&shifted(-step)) == base {
                break;
            }
            step /= 10.0;
        }
        let numeric = (loss(&shifted(step)) - loss(&shifted(-step))) / (2.0 * step);
        worst = worst.max((analytic[j] - numeric).abs() / numeric.abs().max(1e-12));
    }
    worst
}
