//! Minibatch Adam training of the readout on synthetic scenes.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::features::{extract_features, FeatureStack, DEFAULT_CHANNELS, SCALE};
use super::model::{backward, forward, ReadoutModel};
use super::scene::{random_scene, SyntheticScene};
use crate::error::{Error, Result};
use crate::fixation::{rasterize_sparse, Weighting, DEFAULT_EPS};
use crate::losses::{LossKind, PoolingSpec};
use crate::metrics::mix_seed;
use crate::raster::{scale_index, ProbabilityMap, SparseFixation};

const EVAL_SALT: u64 = 0xE7A1_5EED;
const SHUFFLE_SALT: u64 = 0x5A0F_F1E5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub loss: LossKind,
    pub window: usize,
    pub seed: u64,
    pub scenes: usize,
    pub eval_scenes: usize,
    pub channels: usize,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch: 16,
            lr: 1e-3,
            loss: LossKind::PoolingKld,
            window: 3,
            seed: 0,
            scenes: 200,
            eval_scenes: 50,
            channels: DEFAULT_CHANNELS,
            eps: DEFAULT_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub hit_rate: f64,
}

/// Row 0 is the untrained model; row `e` follows epoch `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingTrace {
    pub fn initial(&self) -> &EpochRecord {
        &self.epochs[0]
    }

    pub fn last(&self) -> &EpochRecord {
        self.epochs.last().expect("trace has the initial row")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "mean_loss", "hit_rate"])?;
        for r in &self.epochs {
            w.write_record([
                r.epoch.to_string(),
                r.mean_loss.to_string(),
                r.hit_rate.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A scene prepared for training: features on the coarse grid and the
/// rasterized count-weighted label.
#[derive(Debug, Clone)]
pub struct Example {
    pub scene: SyntheticScene,
    pub features: FeatureStack,
    pub label: ProbabilityMap,
}

impl Example {
    pub fn from_scene(scene: SyntheticScene, channels: usize) -> Result<Self> {
        let features = extract_features(&scene.image, channels);
        let label = rasterize_sparse(
            &scene.true_centers,
            features.width,
            features.height,
            Weighting::CountProportional,
        )?;
        Ok(Self {
            scene,
            features,
            label,
        })
    }
}

pub fn build_examples(seed: u64, count: usize, channels: usize) -> Result<Vec<Example>> {
    (0..count as u64)
        .map(|i| Example::from_scene(random_scene(mix_seed(seed, i))?, channels))
        .collect()
}

/// Whether the predicted argmax cell is within `radius` cells (Chebyshev) of
/// the cell holding some true center.
pub fn is_hit(
    prediction: (usize, usize),
    centers: &SparseFixation,
    grid: (usize, usize),
    radius: usize,
) -> bool {
    let sx = grid.0 as f64 / centers.width as f64;
    let sy = grid.1 as f64 / centers.height as f64;
    centers.centers.iter().any(|c| {
        let cx = scale_index(c.x, sx, grid.0);
        let cy = scale_index(c.y, sy, grid.1);
        prediction.0.abs_diff(cx) <= radius && prediction.1.abs_diff(cy) <= radius
    })
}

pub fn hit_rate(model: &ReadoutModel, examples: &[Example], radius: usize) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for ex in examples {
        let out = forward(model, &ex.features)?;
        if is_hit(out.argmax(), &ex.scene.true_centers, out.dims(), radius) {
            hits += 1;
        }
    }
    Ok(hits as f64 / examples.len() as f64)
}

pub fn mean_loss(
    model: &ReadoutModel,
    examples: &[Example],
    kind: LossKind,
    spec: PoolingSpec,
    eps: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for ex in examples {
        total += backward(model, &ex.features, &ex.label, kind, spec, eps)?.0;
    }
    Ok(total / examples.len() as f64)
}

/// Trains a zero-initialized readout and records the per-epoch trace.
pub fn train(config: &TrainConfig) -> Result<(TrainingTrace, ReadoutModel)> {
    if config.batch == 0 || config.scenes == 0 {
        return Err(Error::InvalidParameter(
            "batch size and scene count must be positive".into(),
        ));
    }
    if !(config.lr >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be >= 0, got {}",
            config.lr
        )));
    }
    let spec = PoolingSpec::new(config.window)?;
    let train_set = build_examples(config.seed, config.scenes, config.channels)?;
    let eval_set = build_examples(config.seed ^ EVAL_SALT, config.eval_scenes, config.channels)?;
    train_on(config, spec, &train_set, &eval_set)
}

/// Training loop over prepared examples.
pub fn train_on(
    config: &TrainConfig,
    spec: PoolingSpec,
    train_set: &[Example],
    eval_set: &[Example],
) -> Result<(TrainingTrace, ReadoutModel)> {
    let channels = train_set
        .first()
        .map(|e| e.features.channel_count())
        .ok_or_else(|| Error::InvalidInput("empty training set".into()))?;
    let mut params = ReadoutModel::zeros(channels).params();
    let mut adam = AdamState::new(params.len(), config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let record = |epoch: usize, params: &[f64]| -> Result<EpochRecord> {
        let model = ReadoutModel::from_params(params);
        Ok(EpochRecord {
            epoch,
            mean_loss: mean_loss(&model, train_set, config.loss, spec, config.eps)?,
            hit_rate: hit_rate(&model, eval_set, spec.radius())?,
        })
    };

    let mut trace = vec![record(0, &params)?];
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch) {
            let model = ReadoutModel::from_params(&params);
            let mut grads = vec![0.0; params.len()];
            for &i in batch {
                let ex = &train_set[i];
                let (_, g) = backward(
                    &model,
                    &ex.features,
                    &ex.label,
                    config.loss,
                    spec,
                    config.eps,
                )?;
                grads.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
            let n = batch.len() as f64;
            grads.iter_mut().for_each(|g| *g /= n);
            adam.update(&mut params, &grads);
        }
        trace.push(record(epoch, &params)?);
    }
    Ok((
        TrainingTrace { epochs: trace },
        ReadoutModel::from_params(&params),
    ))
}

/// Output grid size for a scene of the given dimensions.
pub fn grid_for(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(SCALE), height.div_ceil(SCALE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Center;

    fn small_config() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            scenes: 24,
            eval_scenes: 8,
            batch: 8,
            channels: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_keeps_loss_constant() {
        let config = TrainConfig {
            lr: 0.0,
            ..small_config()
        };
        let (trace, model) = train(&config).unwrap();
        let first = trace.initial().mean_loss;
        for r in &trace.epochs {
            assert!((r.mean_loss - first).abs() < 1e-12);
        }
        assert_eq!(model, ReadoutModel::zeros(4));
    }

    #[test]
    fn training_is_deterministic() {
        let a = train(&small_config()).unwrap();
        let b = train(&small_config()).unwrap();
        assert_eq!(a, b);
        assert!(a
            .0
            .epochs
            .iter()
            .all(|r| r.mean_loss.is_finite() && (0.0..=1.0).contains(&r.hit_rate)));
    }

    #[test]
    fn hit_test_uses_chebyshev_radius() {
        let sf = SparseFixation::new(
            256,
            256,
            vec![Center {
                x: 40.0,
                y: 40.0,
                weight: 1,
            }],
        )
        .unwrap();
        assert!(is_hit((2, 2), &sf, (16, 16), 0));
        assert!(is_hit((3, 1), &sf, (16, 16), 1));
        assert!(!is_hit((4, 2), &sf, (16, 16), 1));
    }

    #[test]
    fn trace_csv_header() {
        let trace = TrainingTrace {
            epochs: vec![EpochRecord {
                epoch: 0,
                mean_loss: 2.5,
                hit_rate: 0.5,
            }],
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,mean_loss,hit_rate\n0,2.5,0.5\n"
        );
    }
}
