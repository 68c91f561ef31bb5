//! Sparsification of fixation maps into weighted cluster centers.

mod gmm;
mod kmeans;
mod sweep;
mod ward;

use std::fmt;
use std::str::FromStr;

pub use gmm::{gmm_cluster, gmm_fit, Component, GmmFit, VARIANCE_FLOOR};
pub use kmeans::{kmeans_cluster, kmeans_fit, KMeansFit};
pub use sweep::{preservation_sweep, PreservationScore, SWEEP_HEADER};
pub use ward::{ward_cluster, TIE_TOLERANCE};

use crate::error::{Error, Result};
use crate::raster::{Center, FixationPixelMap, SparseFixation};

/// `(x, y)` in pixel units.
pub type Point = (f64, f64);

/// Cluster count used to build sparse labels.
pub const DEFAULT_K: usize = 24;

#[inline]
pub(crate) fn sq_dist(a: Point, b: Point) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

pub(crate) fn validate(points: &[Point], k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidParameter("cluster count must be >= 1".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("cannot cluster zero points".into()));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidInput(
            "point coordinates must be finite".into(),
        ));
    }
    Ok(())
}

/// One cluster id per input point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl ClusterAssignment {
    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
            k: n,
        }
    }

    pub fn from_labels(labels: Vec<usize>, k: usize) -> Self {
        debug_assert!(labels.iter().all(|&l| l < k));
        Self { labels, k }
    }

    /// Relabels arbitrary keys as `0..k` in order of first appearance.
    pub fn from_keys(keys: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = keys
            .iter()
            .map(|key| {
                let next = map.len();
                *map.entry(*key).or_insert(next)
            })
            .collect();
        Self {
            labels,
            k: map.len(),
        }
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// The partition as sorted member lists, independent of label numbering.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups.retain(|g| !g.is_empty());
        groups.sort();
        groups
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Ward,
    KMeans,
    Gmm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ward, Method::KMeans, Method::Gmm];

    pub fn cluster(self, points: &[Point], k: usize, seed: u64) -> Result<ClusterAssignment> {
        match self {
            Method::Ward => ward_cluster(points, k),
            Method::KMeans => kmeans_cluster(points, k, seed),
            Method::Gmm => gmm_cluster(points, k, seed),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ward => "ward",
            Method::KMeans => "kmeans",
            Method::Gmm => "gmm",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ward" => Ok(Method::Ward),
            "kmeans" => Ok(Method::KMeans),
            "gmm" => Ok(Method::Gmm),
            other => Err(Error::InvalidParameter(format!(
                "unknown clustering method {other:?} (expected ward, kmeans or gmm)"
            ))),
        }
    }
}

/// Mean location and member count of every nonempty cluster, in id order.
pub fn centers_of(points: &[Point], assignment: &ClusterAssignment) -> Vec<Center> {
    let mut acc = vec![(0.0, 0.0, 0u64); assignment.k];
    for (p, &l) in points.iter().zip(&assignment.labels) {
        acc[l].0 += p.0;
        acc[l].1 += p.1;
        acc[l].2 += 1;
    }
    acc.into_iter()
        .filter(|a| a.2 > 0)
        .map(|(sx, sy, n)| Center {
            x: sx / n as f64,
            y: sy / n as f64,
            weight: n,
        })
        .collect()
}

/// Cluster a fixation map and summarize each cluster by its center.
pub fn sparsify(
    map: &FixationPixelMap,
    method: Method,
    k: usize,
    seed: u64,
) -> Result<SparseFixation> {
    if map.is_empty() {
        return Err(Error::InvalidInput(
            "fixation map has no points to sparsify".into(),
        ));
    }
    let points = map.coords();
    let assignment = method.cluster(&points, k, seed)?;
    SparseFixation::new(map.width(), map.height(), centers_of(&points, &assignment))
}
