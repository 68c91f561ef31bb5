//! Desk-scale training of a 1x1 readout with the pooling KLD loss.

mod adam;
mod features;
mod model;
mod scene;
mod train;

pub use adam::{adam_step, AdamState};
pub use features::{extract_features, FeatureStack, DEFAULT_CHANNELS, SCALE};
pub use model::{backward, forward, sigmoid, softplus, ReadoutModel};
pub use scene::{
    generate_scene, random_scene, synthetic_fixations, SyntheticScene, MAX_OBJECTS, MIN_SEPARATION,
    SCENE_SIDE,
};
pub use train::{
    build_examples, grid_for, hit_rate, is_hit, mean_loss, train, train_on, EpochRecord, Example,
    TrainConfig, TrainingTrace,
};
