//! KL-divergence losses on saliency grids, with gradients taken with respect
//! to the raw (pre-normalization) prediction.
//!
//! With `Z = sum_k (r_k + eps)` and `p_j = (r_j + eps) / Z`, both losses have
//! the gradient
//!
//! ```text
//! dL/dr_j = (sum_i l_i) / Z - c_j / (r_j + eps)
//! ```
//!
//! where `c_j` is the label mass that reads its prediction from cell `j`:
//! `c_j = l_j` for plain KLD, and for pooling KLD the sum of `l_i` over every
//! window `i` whose max-pooled value comes from `j`. The pooled prediction is
//! deliberately left unnormalized, so label cells act as gates and pooled
//! cells without label mass contribute nothing.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dims, Error, Result};
use crate::raster::{GrayImage, ProbabilityMap};

/// Members of a window closer than this to its max count as tied.
pub const TIE_EPS: f64 = 1e-9;
pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
const MAX_STEP_REDUCTIONS: usize = 4;

/// Square max-pooling window, stride 1, same-size output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolingSpec {
    window: usize,
}

impl PoolingSpec {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 || window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "pooling window must be odd and >= 1, got {window}"
            )));
        }
        Ok(Self { window })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn radius(&self) -> usize {
        self.window / 2
    }
}

impl Default for PoolingSpec {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Kld,
    #[default]
    PoolingKld,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Kld => "kld",
            LossKind::PoolingKld => "pooling_kld",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "kld" => Ok(LossKind::Kld),
            "pooling_kld" | "pooling" => Ok(LossKind::PoolingKld),
            other => Err(Error::InvalidParameter(format!(
                "unknown loss {other:?} (expected kld or pooling_kld)"
            ))),
        }
    }
}

/// Loss value and its gradient with respect to the raw prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major `dL/d pred_raw`.
    pub gradient: Vec<f64>,
}

impl LossValue {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Same-size max pooling; returns pooled values and, per cell, the row-major
/// index of the first maximum in its window.
pub(crate) fn pool_with_argmax(
    values: &[f64],
    width: usize,
    height: usize,
    radius: usize,
) -> (Vec<f64>, Vec<usize>) {
    let mut pooled = Vec::with_capacity(values.len());
    let mut arg = Vec::with_capacity(values.len());
    for y in 0..height {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius).min(height - 1);
        for x in 0..width {
            let x0 = x.saturating_sub(radius);
            let x1 = (x + radius).min(width - 1);
            let mut best = y0 * width + x0;
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    let i = yy * width + xx;
                    if values[i] > values[best] {
                        best = i;
                    }
                }
            }
            pooled.push(values[best]);
            arg.push(best);
        }
    }
    (pooled, arg)
}

pub fn maxpool(pred: &GrayImage, spec: PoolingSpec) -> GrayImage {
    let (w, h) = pred.dims();
    let (pooled, _) = pool_with_argmax(pred.data(), w, h, spec.radius());
    GrayImage::from_raw(w, h, pooled)
}

#[inline]
fn kl_term(label: f64, pred: f64) -> f64 {
    if label == 0.0 {
        0.0
    } else {
        label * (label.ln() - pred.ln())
    }
}

fn evaluate_raw(
    label: &[f64],
    raw: &[f64],
    width: usize,
    height: usize,
    pool_radius: Option<usize>,
    eps: f64,
) -> Result<LossValue> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be >= 0, got {eps}"
        )));
    }
    if let Some(v) = raw.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "predictions must be finite and nonnegative, found {v}"
        )));
    }
    let z: f64 = raw.iter().map(|r| r + eps).sum();
    if !(z > 0.0) {
        return Err(Error::InvalidInput("prediction has no mass".into()));
    }
    let pred: Vec<f64> = raw.iter().map(|r| (r + eps) / z).collect();

    let (read, gate) = match pool_radius {
        None => (pred.clone(), label.to_vec()),
        Some(radius) => {
            let (pooled, arg) = pool_with_argmax(&pred, width, height, radius);
            let mut gate = vec![0.0; label.len()];
            for (l, a) in label.iter().zip(&arg) {
                gate[*a] += l;
            }
            (pooled, gate)
        }
    };

    let value: f64 = label.iter().zip(&read).map(|(l, p)| kl_term(*l, *p)).sum();
    if !value.is_finite() {
        return Err(Error::InvalidInput(
            "prediction is zero where the label has mass; use eps > 0".into(),
        ));
    }
    let label_mass: f64 = label.iter().sum();
    let gradient = raw
        .iter()
        .zip(&gate)
        .map(|(r, c)| label_mass / z - if *c == 0.0 { 0.0 } else { c / (r + eps) })
        .collect();
    Ok(LossValue {
        value,
        width,
        height,
        gradient,
    })
}

/// Plain KL divergence of the normalized, smoothed prediction from `label`.
pub fn kld(label: &ProbabilityMap, pred_raw: &GrayImage, eps: f64) -> Result<LossValue> {
    check_dims(label.dims(), pred_raw.dims())?;
    let (w, h) = pred_raw.dims();
    evaluate_raw(label.data(), pred_raw.data(), w, h, None, eps)
}

/// KL divergence against the max-pooled (and not renormalized) prediction.
pub fn pooling_kld(
    label: &ProbabilityMap,
    pred_raw: &GrayImage,
    spec: PoolingSpec,
    eps: f64,
) -> Result<LossValue> {
    check_dims(label.dims(), pred_raw.dims())?;
    let (w, h) = pred_raw.dims();
    evaluate_raw(
        label.data(),
        pred_raw.data(),
        w,
        h,
        Some(spec.radius()),
        eps,
    )
}

pub fn evaluate(
    kind: LossKind,
    label: &ProbabilityMap,
    pred_raw: &GrayImage,
    spec: PoolingSpec,
    eps: f64,
) -> Result<LossValue> {
    match kind {
        LossKind::Kld => kld(label, pred_raw, eps),
        LossKind::PoolingKld => pooling_kld(label, pred_raw, spec, eps),
    }
}

/// Cells that are a tied maximum (within [`TIE_EPS`]) of some pooling window.
pub fn tied_cells(values: &[f64], width: usize, height: usize, radius: usize) -> Vec<bool> {
    let mut tied = vec![false; values.len()];
    let (pooled, _) = pool_with_argmax(values, width, height, radius);
    for y in 0..height {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius).min(height - 1);
        for x in 0..width {
            let x0 = x.saturating_sub(radius);
            let x1 = (x + radius).min(width - 1);
            let max = pooled[y * width + x];
            let top: Vec<usize> = (y0..=y1)
                .flat_map(|yy| (x0..=x1).map(move |xx| yy * width + xx))
                .filter(|&i| max - values[i] <= TIE_EPS)
                .collect();
            if top.len() > 1 {
                for i in top {
                    tied[i] = true;
                }
            }
        }
    }
    tied
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub loss: LossKind,
    pub value: f64,
    pub grad_norm: f64,
    pub max_rel_err: f64,
    /// Coordinates skipped because they are a tied window maximum.
    pub tie_count: usize,
    pub checked: usize,
    /// Coordinates checked with a smaller step because `h` moved some window
    /// argmax.
    pub reduced_steps: usize,
}

/// Compares the analytic gradient with central finite differences of step
/// `h` on every coordinate not involved in a max-pooling tie.
///
/// When a step of `h` would change which cell wins some pooling window, the
/// step for that coordinate is divided by ten until the routing is unchanged.
/// A coordinate that still flips a window at the smallest step counts as tied.
pub fn grad_check(
    kind: LossKind,
    label: &ProbabilityMap,
    pred_raw: &GrayImage,
    spec: PoolingSpec,
    eps: f64,
    h: f64,
) -> Result<GradCheckReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be > 0, got {h}"
        )));
    }
    let analytic = evaluate(kind, label, pred_raw, spec, eps)?;
    let (w, hgt) = pred_raw.dims();
    let excluded = match kind {
        LossKind::Kld => vec![false; pred_raw.len()],
        LossKind::PoolingKld => {
            let z: f64 = pred_raw.data().iter().map(|r| r + eps).sum();
            let pred: Vec<f64> = pred_raw.data().iter().map(|r| (r + eps) / z).collect();
            tied_cells(&pred, w, hgt, spec.radius())
        }
    };

    let radius = pool_radius(kind, spec);
    let routing = |raw: &[f64]| -> Option<Vec<usize>> {
        let r = radius?;
        let z: f64 = raw.iter().map(|v| v + eps).sum();
        let pred: Vec<f64> = raw.iter().map(|v| (v + eps) / z).collect();
        Some(pool_with_argmax(&pred, w, hgt, r).1)
    };
    let base_routing = routing(pred_raw.data());

    let mut raw = pred_raw.data().to_vec();
    let mut max_rel_err: f64 = 0.0;
    let mut checked = 0;
    let mut reduced_steps = 0;
    let mut flipped = 0;
    for j in 0..raw.len() {
        if excluded[j] {
            continue;
        }
        let orig = raw[j];
        if orig - h < 0.0 {
            return Err(Error::InvalidInput(format!(
                "prediction entry {orig} too small for step {h}"
            )));
        }
        let mut step = h;
        let mut stable = false;
        for _ in 0..=MAX_STEP_REDUCTIONS {
            raw[j] = orig + step;
            let up = routing(&raw);
            raw[j] = orig - step;
            let down = routing(&raw);
            raw[j] = orig;
            if up == base_routing && down == base_routing {
                stable = true;
                break;
            }
            step /= 10.0;
        }
        if !stable {
            flipped += 1;
            continue;
        }
        if step < h {
            reduced_steps += 1;
        }
        raw[j] = orig + step;
        let plus = evaluate_raw(label.data(), &raw, w, hgt, radius, eps)?.value;
        raw[j] = orig - step;
        let minus = evaluate_raw(label.data(), &raw, w, hgt, radius, eps)?.value;
        raw[j] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        let err = (analytic.gradient[j] - numeric).abs() / numeric.abs().max(1e-12);
        max_rel_err = max_rel_err.max(err);
        checked += 1;
    }
    Ok(GradCheckReport {
        loss: kind,
        value: analytic.value,
        grad_norm: analytic.gradient_norm(),
        max_rel_err,
        tie_count: excluded.iter().filter(|e| **e).count() + flipped,
        checked,
        reduced_steps,
    })
}

fn pool_radius(kind: LossKind, spec: PoolingSpec) -> Option<usize> {
    match kind {
        LossKind::Kld => None,
        LossKind::PoolingKld => Some(spec.radius()),
    }
}

/// Seeded dense label and strictly positive prediction of the given size.
pub fn random_instance(seed: u64, width: usize, height: usize) -> (ProbabilityMap, GrayImage) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let raw_label: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let total: f64 = raw_label.iter().sum();
    let label =
        ProbabilityMap::from_raw(width, height, raw_label.iter().map(|v| v / total).collect());
    let pred = GrayImage::from_raw(
        width,
        height,
        (0..n).map(|_| rng.random_range(0.1..1.0)).collect(),
    );
    (label, pred)
}
