//! Fixed, linear feature bank evaluated on a 1/16-scale grid.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::raster::GrayImage;

/// Output cells per input pixel along each axis.
pub const SCALE: usize = 16;
pub const DEFAULT_CHANNELS: usize = 16;
const KERNEL_SIDE: usize = 5;
const BANK_SEED: u64 = 0x00F1_7AB5_EED5_0001;

/// `C` same-sized channels on the coarse grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Vec<f64>>,
}

impl FeatureStack {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    /// All-zero stack with the same shape.
    pub fn zeroed(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: vec![vec![0.0; self.cells()]; self.channels.len()],
        }
    }
}

/// The 5x5 kernels for channels `1..channels`; kernel `c` does not depend on
/// how many channels are requested.
fn kernel_bank(channels: usize) -> Vec<[f64; KERNEL_SIDE * KERNEL_SIDE]> {
    let mut rng = ChaCha8Rng::seed_from_u64(BANK_SEED);
    (1..channels)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
        .collect()
}

/// Edge-replicating pad up to a multiple of [`SCALE`].
fn padded(image: &GrayImage) -> (usize, usize, Vec<f64>) {
    let (w, h) = image.dims();
    let pw = w.div_ceil(SCALE) * SCALE;
    let ph = h.div_ceil(SCALE) * SCALE;
    let mut data = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        for x in 0..pw {
            data.push(image.get(x.min(w - 1), y.min(h - 1)));
        }
    }
    (pw, ph, data)
}

fn block_average(data: &[f64], w: usize, h: usize) -> Vec<f64> {
    let (ow, oh) = (w / SCALE, h / SCALE);
    let mut out = vec![0.0; ow * oh];
    for y in 0..h {
        for x in 0..w {
            out[(y / SCALE) * ow + x / SCALE] += data[y * w + x];
        }
    }
    let area = (SCALE * SCALE) as f64;
    out.iter_mut().for_each(|v| *v /= area);
    out
}

fn convolve(data: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (KERNEL_SIDE / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for ky in -r..=r {
                let sy = (y + ky).clamp(0, h as isize - 1) as usize;
                for kx in -r..=r {
                    let sx = (x + kx).clamp(0, w as isize - 1) as usize;
                    acc += kernel[((ky + r) as usize) * KERNEL_SIDE + (kx + r) as usize]
                        * data[sy * w + sx];
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    out
}

/// Channel 0 is the block-averaged intensity; channel `c > 0` block-averages
/// the image filtered with the `c`-th fixed random kernel.
pub fn extract_features(image: &GrayImage, channels: usize) -> FeatureStack {
    let (w, h, data) = padded(image);
    let channels = channels.max(1);
    let mut out = vec![block_average(&data, w, h)];
    for kernel in kernel_bank(channels) {
        out.push(block_average(&convolve(&data, w, h, &kernel), w, h));
    }
    FeatureStack {
        width: w / SCALE,
        height: h / SCALE,
        channels: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_gives_constant_channels() {
        let img = GrayImage::filled(48, 32, 100.0).unwrap();
        let f = extract_features(&img, 6);
        assert_eq!((f.width, f.height, f.channel_count()), (3, 2, 6));
        for ch in &f.channels {
            assert!(ch.iter().all(|v| (v - ch[0]).abs() < 1e-12));
        }
    }

    #[test]
    fn deterministic_and_linear() {
        let img = GrayImage::from_fn(32, 32, |x, y| ((x * 7 + y * 13) % 97) as f64).unwrap();
        let a = extract_features(&img, 8);
        assert_eq!(a, extract_features(&img, 8));
        let scaled = extract_features(&img.scaled(2.5).unwrap(), 8);
        for (ca, cs) in a.channels.iter().zip(&scaled.channels) {
            for (va, vs) in ca.iter().zip(cs) {
                assert!((2.5 * va - vs).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pads_to_a_multiple_of_the_scale() {
        let img = GrayImage::filled(20, 17, 10.0).unwrap();
        let f = extract_features(&img, 2);
        assert_eq!((f.width, f.height), (2, 2));
    }

    #[test]
    fn kernels_are_stable_across_channel_counts() {
        assert_eq!(kernel_bank(4)[..], kernel_bank(9)[..3]);
    }
}
