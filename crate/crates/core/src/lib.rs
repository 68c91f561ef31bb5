//! Sparse-fixation saliency toolkit.
//!
//! - [`fixation`]: thresholding, Gaussian blob maps, normalization, label
//!   rasterization
//! - [`clustering`]: Ward / k-means / GMM sparsification and the
//!   preservation sweep
//! - [`losses`]: KLD and pooling KLD with analytic gradients
//! - [`metrics`]: AUC-Judd, AUC-Borji, sAUC, NSS, CC, Sim, KLD
//! - [`resampling`]: down/up-sampling precision loss
//! - [`trainer`]: toy readout trained with Adam on synthetic scenes

// Negated comparisons are how NaN inputs get rejected along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod dataset;
pub mod error;
pub mod fixation;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod raster;
pub mod resampling;
pub mod trainer;

pub use error::{Error, Result};
pub use raster::{Center, FixationPixelMap, GrayImage, ProbabilityMap, SparseFixation};
