//! Raster types shared by every stage of the pipeline.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row, origin at the
//! top-left corner. Storage is row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`ProbabilityMap`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Single-channel intensity raster, nominal range `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "pixel values must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Builds an image from values the caller has already validated.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multiplies every pixel by `factor` (must be nonnegative).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    /// Index of the first maximum in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.data.iter().enumerate() {
            if *v > self.data[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width)
    }
}

/// Binary raster of discrete fixation locations.
///
/// Points are kept sorted in row-major order with duplicates removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixationPixelMap {
    width: usize,
    height: usize,
    points: Vec<(usize, usize)>,
}

impl FixationPixelMap {
    pub fn new(width: usize, height: usize, mut points: Vec<(usize, usize)>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "map dimensions must be positive, got {width}x{height}"
            )));
        }
        if let Some(p) = points.iter().find(|(x, y)| *x >= width || *y >= height) {
            return Err(Error::InvalidInput(format!(
                "fixation {p:?} outside {width}x{height}"
            )));
        }
        points.sort_unstable_by_key(|&(x, y)| (y, x));
        points.dedup();
        Ok(Self {
            width,
            height,
            points,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, Vec::new())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Row-major membership mask.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.width * self.height];
        for &(x, y) in &self.points {
            mask[y * self.width + x] = true;
        }
        mask
    }

    /// Binary raster with 1.0 at every fixation.
    pub fn to_image(&self) -> GrayImage {
        let data = self
            .mask()
            .into_iter()
            .map(|m| if m { 1.0 } else { 0.0 })
            .collect();
        GrayImage::from_raw(self.width, self.height, data)
    }

    /// Points as real coordinates, in storage order.
    pub fn coords(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|&(x, y)| (x as f64, y as f64))
            .collect()
    }

    /// Rescales coordinates onto a `width x height` grid, merging collisions.
    pub fn rescaled(&self, width: usize, height: usize) -> Result<Self> {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        let points = self
            .points
            .iter()
            .map(|&(x, y)| {
                (
                    scale_index(x as f64, sx, width),
                    scale_index(y as f64, sy, height),
                )
            })
            .collect();
        Self::new(width, height, points)
    }
}

/// Maps a source coordinate onto the cell of a grid scaled by `scale`.
pub(crate) fn scale_index(coord: f64, scale: f64, extent: usize) -> usize {
    let cell = ((coord + 0.5) * scale).floor();
    (cell.max(0.0) as usize).min(extent - 1)
}

/// Nonnegative raster whose entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "probability map needs {}x{} = {} entries, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "probability entries must be finite and nonnegative, found {v}"
            )));
        }
        let total: f64 = data.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "probability map sums to {total}, not 1"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// One-hot distribution at `(x, y)`.
    pub fn one_hot(width: usize, height: usize, x: usize, y: usize) -> Result<Self> {
        if x >= width || y >= height {
            return Err(Error::InvalidInput(format!(
                "one-hot cell ({x}, {y}) outside {width}x{height}"
            )));
        }
        let mut data = vec![0.0; width * height];
        data[y * width + x] = 1.0;
        Self::new(width, height, data)
    }

    pub fn uniform(width: usize, height: usize) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![1.0 / n as f64; n])
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.data.clone())
    }
}

/// One weighted cluster center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub x: f64,
    pub y: f64,
    pub weight: u64,
}

/// Weighted cluster centers summarizing a fixation map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFixation {
    pub width: usize,
    pub height: usize,
    pub centers: Vec<Center>,
}

impl SparseFixation {
    pub fn new(width: usize, height: usize, centers: Vec<Center>) -> Result<Self> {
        let sf = Self {
            width,
            height,
            centers,
        };
        sf.validate()?;
        Ok(sf)
    }

    /// Checks the invariants; useful after deserializing untrusted JSON.
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput(format!(
                "sparse fixation dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        for c in &self.centers {
            let inside = c.x.is_finite()
                && c.y.is_finite()
                && c.x >= 0.0
                && c.y >= 0.0
                && c.x < self.width as f64
                && c.y < self.height as f64;
            if !inside {
                return Err(Error::InvalidInput(format!(
                    "center ({}, {}) outside {}x{}",
                    c.x, c.y, self.width, self.height
                )));
            }
            if c.weight == 0 {
                return Err(Error::InvalidInput("center weight must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn total_weight(&self) -> u64 {
        self.centers.iter().map(|c| c.weight).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sf: Self = serde_json::from_str(text)?;
        sf.validate()?;
        Ok(sf)
    }
}
