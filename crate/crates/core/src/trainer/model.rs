//! 1x1 readout with softplus output.

use serde::{Deserialize, Serialize};

use super::features::FeatureStack;
use crate::error::{check_dims, Error, Result};
use crate::losses::{evaluate, LossKind, PoolingSpec};
use crate::raster::{GrayImage, ProbabilityMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ReadoutModel {
    pub fn zeros(channels: usize) -> Self {
        Self {
            weights: vec![0.0; channels],
            bias: 0.0,
        }
    }

    /// Weights followed by the bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    pub fn from_params(params: &[f64]) -> Self {
        let (bias, weights) = params.split_last().expect("at least the bias");
        Self {
            weights: weights.to_vec(),
            bias: *bias,
        }
    }

    fn check(&self, feats: &FeatureStack) -> Result<()> {
        if feats.channel_count() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "model has {} weights but features have {} channels",
                self.weights.len(),
                feats.channel_count()
            )));
        }
        if !self.bias.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(
                "model parameters must be finite".into(),
            ));
        }
        Ok(())
    }

    fn logits(&self, feats: &FeatureStack) -> Vec<f64> {
        let mut z = vec![self.bias; feats.cells()];
        for (w, ch) in self.weights.iter().zip(&feats.channels) {
            for (zi, f) in z.iter_mut().zip(ch) {
                *zi += w * f;
            }
        }
        z
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `softplus(sum_c w_c * feat_c + b)` per cell.
pub fn forward(model: &ReadoutModel, feats: &FeatureStack) -> Result<GrayImage> {
    model.check(feats)?;
    let out = model.logits(feats).into_iter().map(softplus).collect();
    GrayImage::new(feats.width, feats.height, out)
}

/// Loss of the model output against `label` and its gradient with respect to
/// `[weights..., bias]`.
pub fn backward(
    model: &ReadoutModel,
    feats: &FeatureStack,
    label: &ProbabilityMap,
    kind: LossKind,
    spec: PoolingSpec,
    eps: f64,
) -> Result<(f64, Vec<f64>)> {
    model.check(feats)?;
    check_dims(label.dims(), (feats.width, feats.height))?;
    let z = model.logits(feats);
    let out = GrayImage::new(
        feats.width,
        feats.height,
        z.iter().map(|v| softplus(*v)).collect(),
    )?;
    let loss = evaluate(kind, label, &out, spec, eps)?;
    let dz: Vec<f64> = loss
        .gradient
        .iter()
        .zip(&z)
        .map(|(g, zi)| g * sigmoid(*zi))
        .collect();
    let mut grads: Vec<f64> = feats
        .channels
        .iter()
        .map(|ch| ch.iter().zip(&dz).map(|(f, d)| f * d).sum())
        .collect();
    grads.push(dz.iter().sum());
    Ok((loss.value, grads))
}
