//! Siamese multiple-object tracker: one shared backbone pass per frame, then
//! per-target exemplar/search comparison with score-map refinement, plus a
//! real-time evaluation harness.
//!
//! Tensors are channels-first `f32`; boxes are center-size `f64` in pixels.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod head;
pub mod nn;
pub mod proposal;
pub mod tensor;
pub mod tracker;
pub mod weights;

pub use error::{Error, Result};
pub use eval::{EvalReport, LatencyModel, Sequence};
pub use geometry::{decode_delta, encode_delta, iou, BBox, BoxDelta};
pub use head::PenaltyConfig;
pub use proposal::RoiConfig;
pub use tensor::{conv2d, erode3x3, hanning2d, roi_align, softmax_pairs, Kernel2D, Tensor};
pub use tracker::{TrackOutput, Tracker, TrackerConfig};
pub use weights::{NetworkConfig, NetworkWeights};
