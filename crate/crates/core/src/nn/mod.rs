//! Network building blocks: the padded residual backbone, the feature pyramid,
//! the inertia MLP and weight persistence.

mod backbone;
mod fpn;
pub mod init;
mod mlp;
mod weights_io;

pub use backbone::{backbone_forward, Backbone, BackboneConfig, BackboneStage, ResidualBlock};
pub use fpn::{fpn_forward, upsample_nearest2x, FeaturePyramid, Fpn, PYRAMID_LEVELS};
pub use mlp::{mlp_forward, mlp_train_step, smooth_l1, Dense, MlpWeights, TrainSample};
pub use weights_io::{load_weights, read_weights, save_weights, write_weights, WeightSet};
