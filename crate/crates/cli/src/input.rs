//! Raster loading shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fixlab::dataset::{list_rasters, DatasetLayout};
use fixlab::fixation::threshold_fixations;
use fixlab::io::{is_raster_path, read_gray};
use fixlab::resampling::upsample;
use fixlab::{FixationPixelMap, GrayImage};

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub resize_short: Option<usize>,
}

/// Dimensions after scaling the shorter side to `short`.
pub fn resized_dims(width: usize, height: usize, short: usize) -> (usize, usize) {
    let scale = short as f64 / width.min(height) as f64;
    let w = ((width as f64 * scale).round() as usize).max(1);
    let h = ((height as f64 * scale).round() as usize).max(1);
    (w, h)
}

impl LoadOptions {
    fn target(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        let short = self.resize_short?;
        let dims = resized_dims(width, height, short);
        (dims != (width, height)).then_some(dims)
    }

    pub fn gray(&self, path: &Path) -> Result<GrayImage> {
        let img = read_gray(path).with_context(|| format!("reading {}", path.display()))?;
        match self.target(img.width(), img.height()) {
            Some((w, h)) => Ok(upsample(&img, w, h)?),
            None => Ok(img),
        }
    }

    /// Fixations are thresholded at the native resolution and then moved onto
    /// the resized grid.
    pub fn fixations(&self, path: &Path, threshold: f64) -> Result<FixationPixelMap> {
        let img = read_gray(path).with_context(|| format!("reading {}", path.display()))?;
        let map = threshold_fixations(&img, threshold);
        match self.target(map.width(), map.height()) {
            Some((w, h)) => Ok(map.rescaled(w, h)?),
            None => Ok(map),
        }
    }
}

/// Fixation map files named by `input`: the file itself, every raster in a
/// plain directory, or the fixation maps of a dataset root. Sorted by stem.
/// Also returns how many dataset files were rejected.
pub fn fixation_inputs(input: &Path) -> Result<(Vec<(String, PathBuf)>, usize)> {
    if input.is_file() {
        if !is_raster_path(input) {
            bail!("{}: not a supported raster file", input.display());
        }
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("map")
            .to_string();
        return Ok((vec![(stem, input.to_path_buf())], 0));
    }
    if !input.is_dir() {
        bail!("{}: no such file or directory", input.display());
    }
    if DatasetLayout::looks_like(input) {
        let layout = DatasetLayout::open(input)?;
        for p in &layout.problems {
            eprintln!("error: {p}");
        }
        let entries = layout
            .entries
            .into_iter()
            .map(|e| (e.id, e.fixation_pixels))
            .collect();
        return Ok((entries, layout.problems.len()));
    }
    Ok((list_rasters(input)?.into_iter().collect(), 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_side_resize() {
        assert_eq!(resized_dims(640, 480, 480), (640, 480));
        assert_eq!(resized_dims(1024, 768, 480), (640, 480));
        assert_eq!(resized_dims(300, 600, 480), (480, 960));
    }
}
