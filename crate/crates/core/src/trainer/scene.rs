//! Synthetic scenes with known salient objects.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::{Center, FixationPixelMap, GrayImage, SparseFixation};

pub const SCENE_SIDE: usize = 256;
pub const MIN_SEPARATION: f64 = 64.0;
pub const MAX_OBJECTS: usize = 4;
const MARGIN: f64 = 16.0;
const BACKGROUND: f64 = 12.0;
const BACKGROUND_NOISE: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub image: GrayImage,
    pub true_centers: SparseFixation,
    /// Blob widths in pixels, parallel to `true_centers.centers`.
    pub sigmas: Vec<f64>,
}

/// Dark noisy background with `n_objects` bright Gaussian blobs whose centers
/// are at least [`MIN_SEPARATION`] apart. Each center's weight is the blob
/// peak intensity.
pub fn generate_scene(
    seed: u64,
    n_objects: usize,
    width: usize,
    height: usize,
) -> Result<SyntheticScene> {
    if !(1..=MAX_OBJECTS).contains(&n_objects) {
        return Err(Error::InvalidParameter(format!(
            "scene needs 1..={MAX_OBJECTS} objects, got {n_objects}"
        )));
    }
    if (width as f64) < 2.0 * MARGIN + MIN_SEPARATION
        || (height as f64) < 2.0 * MARGIN + MIN_SEPARATION
    {
        return Err(Error::InvalidParameter(format!(
            "scene {width}x{height} too small for separated objects"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Center> = Vec::with_capacity(n_objects);
    let mut sigmas = Vec::with_capacity(n_objects);
    let mut attempts = 0;
    while centers.len() < n_objects {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::InvalidParameter(format!(
                "could not place {n_objects} separated objects in {width}x{height}"
            )));
        }
        let x = rng.random_range(MARGIN..width as f64 - MARGIN);
        let y = rng.random_range(MARGIN..height as f64 - MARGIN);
        let clear = centers
            .iter()
            .all(|c| ((c.x - x).powi(2) + (c.y - y).powi(2)).sqrt() >= MIN_SEPARATION);
        if clear {
            let peak: u64 = rng.random_range(140..=230);
            sigmas.push(rng.random_range(6.0..14.0));
            centers.push(Center { x, y, weight: peak });
        }
    }

    let mut data: Vec<f64> = (0..width * height)
        .map(|_| BACKGROUND + rng.random::<f64>() * BACKGROUND_NOISE)
        .collect();
    for (c, s) in centers.iter().zip(&sigmas) {
        let denom = 2.0 * s * s;
        for y in 0..height {
            let dy = y as f64 - c.y;
            for x in 0..width {
                let dx = x as f64 - c.x;
                data[y * width + x] += c.weight as f64 * (-(dx * dx + dy * dy) / denom).exp();
            }
        }
    }
    data.iter_mut().for_each(|v| *v = v.min(255.0));

    Ok(SyntheticScene {
        image: GrayImage::new(width, height, data)?,
        true_centers: SparseFixation::new(width, height, centers)?,
        sigmas,
    })
}

/// Scene with a seeded object count in `1..=MAX_OBJECTS`.
pub fn random_scene(seed: u64) -> Result<SyntheticScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FF_EE00);
    let n = rng.random_range(1..=MAX_OBJECTS);
    generate_scene(seed, n, SCENE_SIDE, SCENE_SIDE)
}

/// Fixation pixels scattered around each object, `per_weight` points per unit
/// of center weight, with isotropic spread `spread` px.
pub fn synthetic_fixations(
    scene: &SyntheticScene,
    per_weight: f64,
    spread: f64,
    seed: u64,
) -> Result<FixationPixelMap> {
    let (w, h) = scene.image.dims();
    let noise = Normal::new(0.0, spread)
        .map_err(|e| Error::InvalidParameter(format!("fixation spread: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    for c in &scene.true_centers.centers {
        let count = (c.weight as f64 * per_weight).round().max(1.0) as usize;
        for _ in 0..count {
            let x = (c.x + noise.sample(&mut rng)).round();
            let y = (c.y + noise.sample(&mut rng)).round();
            if x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64 {
                points.push((x as usize, y as usize));
            }
        }
    }
    FixationPixelMap::new(w, h, points)
}
