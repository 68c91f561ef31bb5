//! Raster and sparse-fixation file formats.
//!
//! Binary PGM (P5, maxval 255) is always available; ASCII PGM and 16-bit
//! PGM are accepted on read. 8-bit grayscale PNG needs the `png` feature.
//! 16-bit inputs are rescaled to the nominal `[0, 255]` range.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::fixation::threshold_fixations;
use crate::raster::{FixationPixelMap, GrayImage, SparseFixation};

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" | "pnm" => Ok(ImageFormat::Pnm),
        #[cfg(feature = "png")]
        "png" => Ok(ImageFormat::Png),
        _ => Err(Error::Format(format!(
            "{}: expected a .pgm{} file",
            path.display(),
            if cfg!(feature = "png") {
                " or .png"
            } else {
                ""
            }
        ))),
    }
}

/// True if the file extension names a raster format this build can read.
pub fn is_raster_path(path: &Path) -> bool {
    format_for(path).is_ok()
}

fn to_gray(img: DynamicImage) -> Result<GrayImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 257.0)
            .collect(),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLumaA16(_) => img
            .to_luma8()
            .into_raw()
            .into_iter()
            .map(f64::from)
            .collect(),
        _ => {
            return Err(Error::Format(
                "only single-channel grayscale rasters are supported".into(),
            ))
        }
    };
    GrayImage::new(w, h, data)
}

pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let mut reader = ImageReader::new(BufReader::new(File::open(path)?));
    reader.set_format(format);
    to_gray(reader.decode()?)
}

/// Rounds and clamps to 8 bits.
fn quantize(img: &GrayImage) -> Vec<u8> {
    img.data()
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect()
}

pub fn write_gray(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let bytes = quantize(img);
    let (w, h) = (img.width() as u32, img.height() as u32);
    let out = BufWriter::new(File::create(path)?);
    match format {
        ImageFormat::Pnm => PnmEncoder::new(out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(&bytes, w, h, ExtendedColorType::L8)?,
        #[cfg(feature = "png")]
        ImageFormat::Png => image::codecs::png::PngEncoder::new(out).write_image(
            &bytes,
            w,
            h,
            ExtendedColorType::L8,
        )?,
        _ => unreachable!("format_for only returns supported formats"),
    }
    Ok(())
}

/// Writes `img` scaled so that its maximum maps to 255.
pub fn write_gray_stretched(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let max = img.max();
    if max > 0.0 {
        write_gray(path, &img.scaled(255.0 / max)?)
    } else {
        write_gray(path, img)
    }
}

pub fn read_fixation_map(path: impl AsRef<Path>, threshold: f64) -> Result<FixationPixelMap> {
    Ok(threshold_fixations(&read_gray(path)?, threshold))
}

/// Binary fixation raster: 255 at fixations, 0 elsewhere.
pub fn write_fixation_map(path: impl AsRef<Path>, map: &FixationPixelMap) -> Result<()> {
    write_gray(path, &map.to_image().scaled(255.0)?)
}

pub fn read_sparse(path: impl AsRef<Path>) -> Result<SparseFixation> {
    SparseFixation::from_json(&std::fs::read_to_string(path)?)
}

pub fn write_sparse(path: impl AsRef<Path>, sf: &SparseFixation) -> Result<()> {
    std::fs::write(path, sf.to_json()?)?;
    Ok(())
}
