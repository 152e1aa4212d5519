//! Exemplar/search matching and multi-target score refinement.

pub mod anchors;
pub mod penalty;
pub mod rpn;
pub mod select;
pub mod xcorr;

pub use anchors::{canonical_to_image, cell_proposals, decode_proposals, AnchorSet, CANONICAL_SIDE};
pub use penalty::{
    build_distractor_field, distractor_mask, distractor_value, penalize, shape_factor, shape_penalty,
    DistractorField, PenaltyConfig,
};
pub use rpn::{pdrpn_forward, rpn_finish, rpn_prepare, HeadWeights, ScoreMaps};
pub use select::{argmax, select_box};
pub use xcorr::{center_exemplars, ncc_scores, pairwise_depthwise_xcorr};
