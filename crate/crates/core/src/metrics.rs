//! Saliency evaluation metrics: AUC-Judd, AUC-Borji, shuffled AUC, NSS, CC,
//! Sim and KLD, plus a per-pair scorer that records failures instead of
//! aborting.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dims, Error, Result};
use crate::fixation::{normalize_values, DEFAULT_EPS};
use crate::raster::{FixationPixelMap, GrayImage};

pub const DEFAULT_SPLITS: usize = 100;

fn require_fixations(fix: &FixationPixelMap) -> Result<()> {
    if fix.is_empty() {
        return Err(Error::UndefinedMetric(
            "metric needs at least one fixation".into(),
        ));
    }
    Ok(())
}

fn values_at(s: &GrayImage, points: &[(usize, usize)]) -> Vec<f64> {
    points.iter().map(|&(x, y)| s.get(x, y)).collect()
}

/// Appends the trapezoid from the previous ROC point to `(fpr, tpr)`.
#[inline]
fn trapezoid(area: &mut f64, prev: &mut (f64, f64), fpr: f64, tpr: f64) {
    *area += (fpr - prev.0) * (tpr + prev.1) / 2.0;
    *prev = (fpr, tpr);
}

/// ROC area with thresholds at the saliency of every fixation.
///
/// At threshold `t`, TPR is the fraction of fixations with `S >= t` and FPR
/// the fraction of non-fixated pixels with `S >= t`; the curve is closed with
/// `(0, 0)` and `(1, 1)`.
pub fn auc_judd(s: &GrayImage, fixations: &FixationPixelMap) -> Result<f64> {
    check_dims(s.dims(), fixations.dims())?;
    require_fixations(fixations)?;
    let mask = fixations.mask();
    let mut pos = values_at(s, fixations.points());
    let mut neg: Vec<f64> = s
        .data()
        .iter()
        .zip(&mask)
        .filter(|(_, m)| !**m)
        .map(|(v, _)| *v)
        .collect();
    if neg.is_empty() {
        return Err(Error::UndefinedMetric(
            "every pixel is a fixation; false-positive rate undefined".into(),
        ));
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| b.total_cmp(a));

    let (n_pos, n_neg) = (pos.len() as f64, neg.len() as f64);
    let mut area = 0.0;
    let mut prev = (0.0, 0.0);
    let (mut tp, mut fp) = (0usize, 0usize);
    for &t in &pos {
        while tp < pos.len() && pos[tp] >= t {
            tp += 1;
        }
        while fp < neg.len() && neg[fp] >= t {
            fp += 1;
        }
        trapezoid(&mut area, &mut prev, fp as f64 / n_neg, tp as f64 / n_pos);
    }
    trapezoid(&mut area, &mut prev, 1.0, 1.0);
    Ok(area)
}

/// Exact ROC area for positives against negatives, thresholding at every
/// distinct value of either set (ties contribute half).
pub fn roc_area(pos: &[f64], neg: &[f64]) -> f64 {
    let mut pos = pos.to_vec();
    let mut neg = neg.to_vec();
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| b.total_cmp(a));
    let (n_pos, n_neg) = (pos.len() as f64, neg.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut area = 0.0;
    let mut prev = (0.0, 0.0);
    while i < pos.len() || j < neg.len() {
        let t = match (pos.get(i), neg.get(j)) {
            (Some(a), Some(b)) => a.max(*b),
            (Some(a), None) => *a,
            (None, Some(b)) => *b,
            (None, None) => unreachable!(),
        };
        while i < pos.len() && pos[i] >= t {
            i += 1;
        }
        while j < neg.len() && neg[j] >= t {
            j += 1;
        }
        trapezoid(&mut area, &mut prev, j as f64 / n_neg, i as f64 / n_pos);
    }
    trapezoid(&mut area, &mut prev, 1.0, 1.0);
    area
}

/// Mean ROC area over `n_splits` draws of uniformly sampled negative pixels.
///
/// `n_negatives` defaults to the fixation count.
pub fn auc_borji(
    s: &GrayImage,
    fixations: &FixationPixelMap,
    n_splits: usize,
    n_negatives: Option<usize>,
    seed: u64,
) -> Result<f64> {
    check_dims(s.dims(), fixations.dims())?;
    require_fixations(fixations)?;
    if n_splits == 0 {
        return Err(Error::InvalidParameter("n_splits must be >= 1".into()));
    }
    let n_neg = n_negatives.unwrap_or(fixations.len()).max(1);
    let pos = values_at(s, fixations.points());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = s.data();
    let mut total = 0.0;
    for _ in 0..n_splits {
        let neg: Vec<f64> = (0..n_neg)
            .map(|_| data[rng.random_range(0..data.len())])
            .collect();
        total += roc_area(&pos, &neg);
    }
    Ok(total / n_splits as f64)
}

/// Shuffled AUC: negatives drawn from fixations of other images.
pub fn sauc(
    s: &GrayImage,
    fixations: &FixationPixelMap,
    other_fixations: &FixationPixelMap,
    n_splits: usize,
    seed: u64,
) -> Result<f64> {
    check_dims(s.dims(), fixations.dims())?;
    check_dims(s.dims(), other_fixations.dims())?;
    require_fixations(fixations)?;
    if other_fixations.is_empty() {
        return Err(Error::InvalidInput(
            "shuffled AUC needs a nonempty pool of other fixations".into(),
        ));
    }
    if n_splits == 0 {
        return Err(Error::InvalidParameter("n_splits must be >= 1".into()));
    }
    let pos = values_at(s, fixations.points());
    let pool = values_at(s, other_fixations.points());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..n_splits {
        let neg: Vec<f64> = (0..pos.len())
            .map(|_| pool[rng.random_range(0..pool.len())])
            .collect();
        total += roc_area(&pos, &neg);
    }
    Ok(total / n_splits as f64)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Normalized scanpath saliency, using the population standard deviation.
pub fn nss(s: &GrayImage, fixations: &FixationPixelMap) -> Result<f64> {
    check_dims(s.dims(), fixations.dims())?;
    require_fixations(fixations)?;
    let (mean, std) = mean_std(s.data());
    if !(std > 0.0) {
        return Err(Error::UndefinedMetric(
            "NSS undefined for a constant saliency map".into(),
        ));
    }
    let total: f64 = values_at(s, fixations.points())
        .iter()
        .map(|v| (v - mean) / std)
        .sum();
    Ok(total / fixations.len() as f64)
}

/// Pearson correlation of the two rasters.
pub fn cc(s: &GrayImage, g: &GrayImage) -> Result<f64> {
    check_dims(s.dims(), g.dims())?;
    let (ms, ss) = mean_std(s.data());
    let (mg, sg) = mean_std(g.data());
    if !(ss > 0.0) || !(sg > 0.0) {
        return Err(Error::UndefinedMetric(
            "CC undefined when either map is constant".into(),
        ));
    }
    let mut cov = 0.0;
    let mut vs = 0.0;
    let mut vg = 0.0;
    for (a, b) in s.data().iter().zip(g.data()) {
        let (da, db) = (a - ms, b - mg);
        cov += da * db;
        vs += da * da;
        vg += db * db;
    }
    Ok((cov / (vs * vg).sqrt()).clamp(-1.0, 1.0))
}

fn require_mass(img: &GrayImage, name: &str) -> Result<f64> {
    let total = img.sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput(format!("{name} has zero total mass")));
    }
    Ok(total)
}

/// Histogram intersection of the two maps after scaling each to sum 1.
pub fn sim(s: &GrayImage, g: &GrayImage) -> Result<f64> {
    check_dims(s.dims(), g.dims())?;
    let ts = require_mass(s, "saliency map")?;
    let tg = require_mass(g, "ground-truth map")?;
    let total: f64 = s
        .data()
        .iter()
        .zip(g.data())
        .map(|(a, b)| (a / ts).min(b / tg))
        .sum();
    Ok(total.min(1.0))
}

/// KL divergence of the ground truth `g` from the prediction `s`, both
/// smoothed with `eps` and normalized.
pub fn kld_metric(s: &GrayImage, g: &GrayImage, eps: f64) -> Result<f64> {
    check_dims(s.dims(), g.dims())?;
    require_mass(s, "saliency map")?;
    require_mass(g, "ground-truth map")?;
    let sp = normalize_values(s.data(), eps)?;
    let gp = normalize_values(g.data(), eps)?;
    Ok(sp
        .iter()
        .zip(&gp)
        .filter(|(_, gi)| **gi > 0.0)
        .map(|(si, gi)| gi * (gi.ln() - si.ln()))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    AucJudd,
    AucBorji,
    Sauc,
    Nss,
    Cc,
    Sim,
    Kld,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::AucJudd,
        Metric::AucBorji,
        Metric::Sauc,
        Metric::Nss,
        Metric::Cc,
        Metric::Sim,
        Metric::Kld,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::AucJudd => "auc_judd",
            Metric::AucBorji => "auc_borji",
            Metric::Sauc => "sauc",
            Metric::Nss => "nss",
            Metric::Cc => "cc",
            Metric::Sim => "sim",
            Metric::Kld => "kld",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct MetricConfig {
    pub metrics: Vec<Metric>,
    pub n_splits: usize,
    pub n_negatives: Option<usize>,
    pub seed: u64,
    pub eps: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            metrics: Metric::ALL.to_vec(),
            n_splits: DEFAULT_SPLITS,
            n_negatives: None,
            seed: 0,
            eps: DEFAULT_EPS,
        }
    }
}

impl MetricConfig {
    pub fn with_metrics(metrics: &[Metric]) -> Self {
        Self {
            metrics: metrics.to_vec(),
            ..Self::default()
        }
    }

    /// Copy whose seed is derived from `(self.seed, index)`, so batch results
    /// do not depend on scheduling.
    pub fn for_pair(&self, index: u64) -> Self {
        Self {
            seed: mix_seed(self.seed, index),
            ..self.clone()
        }
    }
}

/// SplitMix64 finalizer over the pair of inputs.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        ^ index
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scores for one (prediction, ground truth) pair; absent entries were either
/// not requested or failed (see `failures`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub auc_judd: Option<f64>,
    pub auc_borji: Option<f64>,
    pub sauc: Option<f64>,
    pub nss: Option<f64>,
    pub cc: Option<f64>,
    pub sim: Option<f64>,
    pub kld: Option<f64>,
    pub failures: Vec<(Metric, String)>,
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::AucJudd => self.auc_judd,
            Metric::AucBorji => self.auc_borji,
            Metric::Sauc => self.sauc,
            Metric::Nss => self.nss,
            Metric::Cc => self.cc,
            Metric::Sim => self.sim,
            Metric::Kld => self.kld,
        }
    }

    fn slot(&mut self, metric: Metric) -> &mut Option<f64> {
        match metric {
            Metric::AucJudd => &mut self.auc_judd,
            Metric::AucBorji => &mut self.auc_borji,
            Metric::Sauc => &mut self.sauc,
            Metric::Nss => &mut self.nss,
            Metric::Cc => &mut self.cc,
            Metric::Sim => &mut self.sim,
            Metric::Kld => &mut self.kld,
        }
    }

    pub fn failure(&self, metric: Metric) -> Option<&str> {
        self.failures
            .iter()
            .find(|(m, _)| *m == metric)
            .map(|(_, reason)| reason.as_str())
    }

    /// Per-metric mean over the reports where the metric is present.
    pub fn mean(reports: &[MetricsReport]) -> MetricsReport {
        let mut out = MetricsReport::default();
        for metric in Metric::ALL {
            let present: Vec<f64> = reports.iter().filter_map(|r| r.get(metric)).collect();
            if !present.is_empty() {
                *out.slot(metric) = Some(present.iter().sum::<f64>() / present.len() as f64);
            }
        }
        out
    }
}

/// Scores `s` against the blob map and fixation pixels.
///
/// Dimension mismatches fail the whole pair; any other metric failure is
/// recorded in the report and the remaining metrics still run.
pub fn score_pair(
    s: &GrayImage,
    g_blob: &GrayImage,
    g_pixels: &FixationPixelMap,
    other_fixations: Option<&FixationPixelMap>,
    config: &MetricConfig,
) -> Result<MetricsReport> {
    check_dims(s.dims(), g_blob.dims())?;
    check_dims(s.dims(), g_pixels.dims())?;
    if let Some(other) = other_fixations {
        check_dims(s.dims(), other.dims())?;
    }
    let mut report = MetricsReport::default();
    for &metric in &config.metrics {
        let result = match metric {
            Metric::AucJudd => auc_judd(s, g_pixels),
            Metric::AucBorji => auc_borji(
                s,
                g_pixels,
                config.n_splits,
                config.n_negatives,
                mix_seed(config.seed, 1),
            ),
            Metric::Sauc => match other_fixations {
                Some(other) => sauc(
                    s,
                    g_pixels,
                    other,
                    config.n_splits,
                    mix_seed(config.seed, 2),
                ),
                None => continue,
            },
            Metric::Nss => nss(s, g_pixels),
            Metric::Cc => cc(s, g_blob),
            Metric::Sim => sim(s, g_blob),
            Metric::Kld => kld_metric(s, g_blob, config.eps),
        };
        match result {
            Ok(v) => *report.slot(metric) = Some(v),
            Err(e) => report.failures.push((metric, e.to_string())),
        }
    }
    Ok(report)
}

pub const REPORT_HEADER: [&str; 8] = [
    "id",
    "auc_judd",
    "auc_borji",
    "sauc",
    "nss",
    "cc",
    "sim",
    "kld",
];

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes one CSV row per report in the given order, optionally followed by
/// a `mean` summary row.
pub fn write_reports_csv<W: Write>(
    out: W,
    rows: &[(String, MetricsReport)],
    summary: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    let mut emit = |id: &str, r: &MetricsReport| -> Result<()> {
        let mut record = vec![id.to_string()];
        record.extend(Metric::ALL.iter().map(|m| fmt_opt(r.get(*m))));
        w.write_record(&record)?;
        Ok(())
    };
    for (id, r) in rows {
        emit(id, r)?;
    }
    if summary {
        let reports: Vec<MetricsReport> = rows.iter().map(|(_, r)| r.clone()).collect();
        emit("mean", &MetricsReport::mean(&reports))?;
    }
    w.flush()?;
    Ok(())
}
