//! Downsample/upsample round trips and the precision-loss curve across scale
//! factors.

use std::io::Write;

use crate::error::{Error, Result};
use crate::metrics::{fmt_opt, score_pair, Metric, MetricConfig, MetricsReport};
use crate::raster::{FixationPixelMap, GrayImage};

pub const DEFAULT_FACTORS: [usize; 8] = [1, 2, 4, 8, 16, 20, 24, 32];

/// Metrics reported per factor.
pub const CURVE_METRICS: [Metric; 5] = [
    Metric::AucJudd,
    Metric::Nss,
    Metric::Cc,
    Metric::Sim,
    Metric::Kld,
];

/// Block-average pooling; trailing partial blocks average over their extent.
pub fn downsample(img: &GrayImage, factor: usize) -> Result<GrayImage> {
    if factor < 1 {
        return Err(Error::InvalidParameter(format!(
            "downsample factor must be >= 1, got {factor}"
        )));
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let (w, h) = img.dims();
    let (ow, oh) = (w.div_ceil(factor), h.div_ceil(factor));
    let mut out = vec![0.0; ow * oh];
    for by in 0..oh {
        let y0 = by * factor;
        let y1 = (y0 + factor).min(h);
        for bx in 0..ow {
            let x0 = bx * factor;
            let x1 = (x0 + factor).min(w);
            let mut acc = 0.0;
            for y in y0..y1 {
                acc += img.data()[y * w + x0..y * w + x1].iter().sum::<f64>();
            }
            out[by * ow + bx] = acc / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }
    Ok(GrayImage::from_raw(ow, oh, out))
}

/// Source sample positions and weights along one axis, half-pixel centers,
/// clamped at the edges.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// Bilinear resize to `out_w x out_h`.
pub fn upsample(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidParameter(format!(
            "output dimensions must be positive, got {out_w}x{out_h}"
        )));
    }
    let (w, h) = img.dims();
    let xs = axis_taps(w, out_w);
    let ys = axis_taps(h, out_h);
    let src = img.data();
    let mut out = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bottom = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Ok(GrayImage::from_raw(out_w, out_h, out))
}

/// One scoring row per factor of the round-tripped blob map against the
/// original.
#[derive(Debug, Clone)]
pub struct PrecisionLossCurve {
    pub factors: Vec<usize>,
    pub reports: Vec<MetricsReport>,
}

impl PrecisionLossCurve {
    pub fn metric(&self, metric: Metric) -> Vec<Option<f64>> {
        self.reports.iter().map(|r| r.get(metric)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["factor", "auc_judd", "nss", "cc", "sim", "kld"])?;
        for (f, r) in self.factors.iter().zip(&self.reports) {
            let mut record = vec![f.to_string()];
            record.extend(CURVE_METRICS.iter().map(|m| fmt_opt(r.get(*m))));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn precision_loss_curve(
    g_blob: &GrayImage,
    g_pixels: &FixationPixelMap,
    factors: &[usize],
) -> Result<PrecisionLossCurve> {
    if factors.is_empty() || factors[0] != 1 || factors.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "factors must be strictly increasing and start at 1".into(),
        ));
    }
    let (w, h) = g_blob.dims();
    let config = MetricConfig::with_metrics(&CURVE_METRICS);
    let reports = factors
        .iter()
        .map(|&f| {
            let round_trip = upsample(&downsample(g_blob, f)?, w, h)?;
            score_pair(&round_trip, g_blob, g_pixels, None, &config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrecisionLossCurve {
        factors: factors.to_vec(),
        reports,
    })
}
