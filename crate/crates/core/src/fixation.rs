//! Fixation extraction, Gaussian blob generation, normalization and
//! rasterization of sparse fixations.

use crate::error::{Error, Result};
use crate::raster::{scale_index, FixationPixelMap, GrayImage, ProbabilityMap, SparseFixation};

/// Intensity above which a pixel counts as a fixation.
pub const DEFAULT_THRESHOLD: f64 = 250.0;

/// Additive smoothing applied before normalizing a map into a distribution.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Blur width used for 640x480 inputs; scaled with image height otherwise.
pub const REFERENCE_SIGMA: f64 = 19.0;
pub const REFERENCE_HEIGHT: f64 = 480.0;

/// Default blur width for an image of the given height.
pub fn default_sigma(height: usize) -> f64 {
    REFERENCE_SIGMA * height as f64 / REFERENCE_HEIGHT
}

/// How cluster weights enter a rasterized label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    Uniform,
    #[default]
    CountProportional,
}

/// Pixels whose intensity is strictly greater than `threshold`.
pub fn threshold_fixations(gray: &GrayImage, threshold: f64) -> FixationPixelMap {
    let w = gray.width();
    let points = gray
        .data()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > threshold)
        .map(|(i, _)| (i % w, i / w))
        .collect();
    FixationPixelMap::new(w, gray.height(), points).expect("indices are in bounds")
}

/// Normalized 1-D Gaussian taps over `[-r, r]` with `r = ceil(3 sigma)`.
pub fn gaussian_kernel_1d(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "blur sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / denom).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    Ok(taps)
}

/// Half-sample symmetric reflection of `i` into `[0, n)`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Separable Gaussian blur with reflective borders.
pub fn blur_image(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let taps = gaussian_kernel_1d(sigma)?;
    let radius = (taps.len() / 2) as isize;
    let (w, h) = img.dims();
    let src = img.data();

    let mut horizontal = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (t, k) in taps.iter().zip(-radius..=radius) {
                acc += t * row[reflect(x as isize + k, w)];
            }
            horizontal[y * w + x] = acc;
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for (t, k) in taps.iter().zip(-radius..=radius) {
            let sy = reflect(y as isize + k, h);
            let src_row = &horizontal[sy * w..(sy + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += t * s;
            }
        }
    }
    Ok(GrayImage::from_raw(w, h, out))
}

/// Fixation blob map: the binary fixation raster convolved with a Gaussian.
pub fn gaussian_blur(map: &FixationPixelMap, sigma: f64) -> Result<GrayImage> {
    blur_image(&map.to_image(), sigma)
}

/// `(img + eps) / sum(img + eps)`.
pub fn normalize_to_distribution(img: &GrayImage, eps: f64) -> Result<ProbabilityMap> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing eps must be nonnegative, got {eps}"
        )));
    }
    Ok(ProbabilityMap::from_raw(
        img.width(),
        img.height(),
        normalize_values(img.data(), eps)?,
    ))
}

pub(crate) fn normalize_values(values: &[f64], eps: f64) -> Result<Vec<f64>> {
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "cannot normalize negative or NaN entry {v}"
        )));
    }
    let total: f64 = values.iter().map(|v| v + eps).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidInput(
            "map has no mass to normalize (all zero with eps = 0)".into(),
        ));
    }
    Ok(values.iter().map(|v| (v + eps) / total).collect())
}

/// Raw (unnormalized) cell masses of a sparse fixation on an output grid.
pub fn accumulate_sparse(
    sf: &SparseFixation,
    out_width: usize,
    out_height: usize,
    weighting: Weighting,
) -> Result<GrayImage> {
    if out_width == 0 || out_height == 0 {
        return Err(Error::InvalidParameter(format!(
            "output grid must be nonempty, got {out_width}x{out_height}"
        )));
    }
    if sf.centers.is_empty() {
        return Err(Error::InvalidInput(
            "sparse fixation has no centers to rasterize".into(),
        ));
    }
    sf.validate()?;
    let sx = out_width as f64 / sf.width as f64;
    let sy = out_height as f64 / sf.height as f64;
    let mut data = vec![0.0; out_width * out_height];
    for c in &sf.centers {
        let cx = scale_index(c.x, sx, out_width);
        let cy = scale_index(c.y, sy, out_height);
        data[cy * out_width + cx] += match weighting {
            Weighting::Uniform => 1.0,
            Weighting::CountProportional => c.weight as f64,
        };
    }
    GrayImage::new(out_width, out_height, data)
}

/// Sparse label distribution on an `out_width x out_height` grid.
///
/// A center at source coordinate `c` lands in cell `floor((c + 0.5) * scale)`,
/// which is the nearest cell center after scaling.
pub fn rasterize_sparse(
    sf: &SparseFixation,
    out_width: usize,
    out_height: usize,
    weighting: Weighting,
) -> Result<ProbabilityMap> {
    let raw = accumulate_sparse(sf, out_width, out_height, weighting)?;
    normalize_to_distribution(&raw, 0.0)
}
