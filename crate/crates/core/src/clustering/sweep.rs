use std::io::Write;

use super::{sparsify, Method};
use crate::error::Result;
use crate::fixation::{
    accumulate_sparse, blur_image, gaussian_blur, normalize_to_distribution, Weighting, DEFAULT_EPS,
};
use crate::metrics::{auc_judd, kld_metric, nss, sim};
use crate::raster::FixationPixelMap;

/// How much of the raw fixation map survives sparsification at one cluster
/// count.
#[derive(Debug, Clone, PartialEq)]
pub struct PreservationScore {
    pub cluster_count: usize,
    pub auc_judd: f64,
    pub nss: f64,
    pub sim: f64,
    pub kld: f64,
}

/// For each `k`, sparsify the map, rasterize the centers at full resolution
/// with count weights, blur both that raster and the raw map with `sigma`,
/// and compare the two blob maps.
pub fn preservation_sweep(
    map: &FixationPixelMap,
    method: Method,
    k_values: &[usize],
    sigma: f64,
    seed: u64,
) -> Result<Vec<PreservationScore>> {
    let (w, h) = map.dims();
    let raw_blob = normalize_to_distribution(&gaussian_blur(map, sigma)?, 0.0)?.to_image();
    k_values
        .iter()
        .map(|&k| {
            let sf = sparsify(map, method, k, seed)?;
            let counts = accumulate_sparse(&sf, w, h, Weighting::CountProportional)?;
            let sparse_blob =
                normalize_to_distribution(&blur_image(&counts, sigma)?, 0.0)?.to_image();
            Ok(PreservationScore {
                cluster_count: k,
                auc_judd: auc_judd(&sparse_blob, map)?,
                nss: nss(&sparse_blob, map)?,
                sim: sim(&sparse_blob, &raw_blob)?,
                kld: kld_metric(&sparse_blob, &raw_blob, DEFAULT_EPS)?,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 5] = ["k", "auc_judd", "nss", "sim", "kld"];

impl PreservationScore {
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.cluster_count.to_string(),
            self.auc_judd.to_string(),
            self.nss.to_string(),
            self.sim.to_string(),
            self.kld.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(out: W, scores: &[PreservationScore]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_HEADER)?;
        for s in scores {
            w.write_record(s.csv_fields())?;
        }
        w.flush()?;
        Ok(())
    }
}
