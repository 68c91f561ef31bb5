//! Expectation-maximization for a 2-D Gaussian mixture with one isotropic
//! variance per component.

use super::kmeans::kmeans_fit;
use super::{sq_dist, validate, ClusterAssignment, Point};
use crate::error::Result;

/// Lower bound on every component variance, in px^2.
pub const VARIANCE_FLOOR: f64 = 1e-4;
pub const MAX_EM_STEPS: usize = 300;
const REL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Component {
    pub weight: f64,
    pub mean: Point,
    pub variance: f64,
}

#[derive(Debug, Clone)]
pub struct GmmFit {
    pub assignment: ClusterAssignment,
    pub components: Vec<Component>,
    /// Total log-likelihood before each M-step and at convergence.
    pub log_likelihood: Vec<f64>,
}

fn log_density(p: Point, c: &Component) -> f64 {
    -(2.0 * std::f64::consts::PI * c.variance).ln() - sq_dist(p, c.mean) / (2.0 * c.variance)
}

/// Per-point log of `weight * density` for every component, and the total
/// log-likelihood.
fn e_step(points: &[Point], comps: &[Component]) -> (Vec<Vec<f64>>, f64) {
    let mut total = 0.0;
    let logs = points
        .iter()
        .map(|p| {
            let row: Vec<f64> = comps
                .iter()
                .map(|c| {
                    if c.weight > 0.0 {
                        c.weight.ln() + log_density(*p, c)
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            total += lse;
            row.into_iter().map(|v| v - lse).collect()
        })
        .collect();
    (logs, total)
}

fn m_step(points: &[Point], log_resp: &[Vec<f64>], comps: &mut [Component]) {
    let n = points.len() as f64;
    for (k, comp) in comps.iter_mut().enumerate() {
        let mut mass = 0.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        for (p, row) in points.iter().zip(log_resp) {
            let r = row[k].exp();
            mass += r;
            sx += r * p.0;
            sy += r * p.1;
        }
        comp.weight = mass / n;
        if mass <= f64::MIN_POSITIVE {
            continue;
        }
        let mean = (sx / mass, sy / mass);
        let spread: f64 = points
            .iter()
            .zip(log_resp)
            .map(|(p, row)| row[k].exp() * sq_dist(*p, mean))
            .sum();
        comp.mean = mean;
        comp.variance = (spread / (2.0 * mass)).max(VARIANCE_FLOOR);
    }
}

pub fn gmm_fit(points: &[Point], k: usize, seed: u64) -> Result<GmmFit> {
    validate(points, k)?;
    let n = points.len();
    if n <= k {
        return Ok(GmmFit {
            assignment: ClusterAssignment::singletons(n),
            components: points
                .iter()
                .map(|p| Component {
                    weight: 1.0 / n as f64,
                    mean: *p,
                    variance: VARIANCE_FLOOR,
                })
                .collect(),
            log_likelihood: Vec::new(),
        });
    }

    let init = kmeans_fit(points, k, seed)?;
    let sizes = init.assignment.cluster_sizes();
    let mut spread = vec![0.0; k];
    for (p, &l) in points.iter().zip(&init.assignment.labels) {
        spread[l] += sq_dist(*p, init.centers[l]);
    }
    let mut comps: Vec<Component> = (0..k)
        .map(|c| Component {
            weight: sizes[c] as f64 / n as f64,
            mean: init.centers[c],
            variance: (spread[c] / (2.0 * sizes[c].max(1) as f64)).max(VARIANCE_FLOOR),
        })
        .collect();

    let mut trace = Vec::new();
    let (mut log_resp, mut ll) = e_step(points, &comps);
    trace.push(ll);
    for _ in 0..MAX_EM_STEPS {
        m_step(points, &log_resp, &mut comps);
        let (next_resp, next_ll) = e_step(points, &comps);
        trace.push(next_ll);
        let converged = (next_ll - ll).abs() <= REL_TOLERANCE * ll.abs().max(1.0);
        log_resp = next_resp;
        ll = next_ll;
        if converged {
            break;
        }
    }

    let mut labels: Vec<usize> = log_resp
        .iter()
        .map(|row| {
            let mut best = 0;
            for (c, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    repair_empty(&log_resp, &mut labels, k);

    Ok(GmmFit {
        assignment: ClusterAssignment::from_labels(labels, k),
        components: comps,
        log_likelihood: trace,
    })
}

/// Hands each unclaimed component the point it is most responsible for,
/// taken from a cluster that keeps at least one member.
fn repair_empty(log_resp: &[Vec<f64>], labels: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] >= 2)
            .max_by(|&a, &b| {
                log_resp[a][empty]
                    .total_cmp(&log_resp[b][empty])
                    .then(b.cmp(&a))
            });
        match donor {
            Some(i) => labels[i] = empty,
            None => return,
        }
    }
}

pub fn gmm_cluster(points: &[Point], k: usize, seed: u64) -> Result<ClusterAssignment> {
    Ok(gmm_fit(points, k, seed)?.assignment)
}
